"""Exact expression kernel.

Immutable expressions built from rational constants, named real variables,
field operations, integer powers, the elementary functions sin, cos, tan,
sinh, cosh, tanh, exp, ln, and (optionally) opaque univariate function
symbols used for free boundary data.

Every Expr is kept in a canonical form: the expression is written as a
single fraction num/den where num and den are expanded polynomials in the
variables and in the function-application atoms, den is integer-primitive
with positive leading coefficient (lexicographic generator order) and
gcd(num, den) = 1.  All rational content lives in the numerator.  Two
expressions that are equal as rational functions of their atoms are
therefore structurally identical, and ``==`` on Expr means exactly that.
Semantic zero testing across trigonometric identities is the job of
:func:`is_zero`, which combines a bounded rewrite pass with interval
sampling at controlled precision.

Grammar accepted by :func:`parse` (a leading minus is also accepted in
front of an expression or sub-expression, as a convenience superset so
that rendered output can always be re-read)::

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' ['-'] integer)?
    base   := name | integer | '(' expr ')' | func '(' expr ')'

Decimal literals are rejected (exact arithmetic only).  Unknown function
names are rejected unless they were declared opaque, in which case the
argument must be a bare variable; ``f'(x)``, ``f''(x)`` and so on denote
derivatives of an opaque function and round-trip through the renderer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
import sympy
from sympy.core.function import AppliedUndef
from sympy.integrals.rationaltools import ratint

__all__ = [
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "PoleError",
    "NonRationalIntegrand",
    "NonElementaryAntiderivative",
    "IndeterminateError",
    "Interval",
    "ProvablyZero",
    "ProvablyNonzero",
    "ProbablyZero",
    "ProbablyNonzero",
    "parse",
    "render",
    "number",
    "var",
    "opaque",
    "diff",
    "substitute",
    "instantiate",
    "eval_at",
    "is_zero",
    "antiderivative",
    "variables",
    "opaque_names",
    "is_rational_function",
    "numerator",
    "denominator",
]


class ExprError(ValueError):
    """Base class for kernel errors."""


class ExprSyntaxError(ExprError):
    """Parse failure; carries the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class PoleError(ExprError):
    """Evaluation hit a zero denominator (or a function domain edge)."""


class NonRationalIntegrand(ExprError):
    """antiderivative() requires the integrand rational in the variable."""


class NonElementaryAntiderivative(ExprError):
    """The antiderivative leaves the kernel fragment (atan, root sums...)."""


class IndeterminateError(ExprError):
    """is_zero() could not reach a verdict at the requested effort."""


_FUNCS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
    "exp": sympy.exp,
    "ln": sympy.log,
}

_FUNC_NAMES = {
    sympy.sin: "sin",
    sympy.cos: "cos",
    sympy.tan: "tan",
    sympy.sinh: "sinh",
    sympy.cosh: "cosh",
    sympy.tanh: "tanh",
    sympy.exp: "exp",
    sympy.log: "ln",
}

_SYMBOLS: dict[str, sympy.Symbol] = {}
_OPAQUE: dict[str, sympy.core.function.UndefinedFunction] = {}


def _sym(name: str) -> sympy.Symbol:
    s = _SYMBOLS.get(name)
    if s is None:
        s = sympy.Symbol(name, real=True)
        _SYMBOLS[name] = s
    return s


def _opaque_head(name: str):
    f = _OPAQUE.get(name)
    if f is None:
        f = sympy.Function(name, real=True)
        _OPAQUE[name] = f
    return f


# ---------------------------------------------------------------------------
# canonical form


def _atom_sort_key(atom: sympy.Expr) -> tuple:
    # variables first (alphabetical), then function atoms by rendered text
    if atom.is_Symbol:
        return (0, str(atom))
    return (1, _render_atom(atom))


def _function_atoms(sx: sympy.Expr) -> list[sympy.Expr]:
    # nested atoms (the sin(x) inside sin(sin(x))) are harmless extra
    # generators: Poly matches whole subtrees, so they simply get degree 0
    atoms = set(sx.atoms(sympy.Function)) | set(sx.atoms(sympy.Derivative))
    return sorted(atoms, key=_atom_sort_key)


def _canonical(sx: sympy.Expr) -> tuple[sympy.Expr, tuple, sympy.Poly | None, sympy.Poly | None]:
    """Return (canonical sympy expr, gens, num Poly, den Poly)."""
    if sx.has(sympy.zoo) or sx.has(sympy.nan) or sx.has(sympy.oo) or sx.has(-sympy.oo):
        raise PoleError("expression is singular (division by zero)")
    # canonicalize arguments inside every function atom, innermost first
    sx = _rebuild_atoms(sx)
    frac = sympy.cancel(sympy.together(sx))
    num, den = frac.as_numer_denom()
    gens = tuple(sorted(set(num.free_symbols) | set(den.free_symbols), key=_atom_sort_key))
    fatoms = tuple(_function_atoms(num) + [a for a in _function_atoms(den) if a not in _function_atoms(num)])
    gens = tuple(sorted(set(gens) | set(fatoms), key=_atom_sort_key))
    if not gens:
        q = sympy.Rational(num) / sympy.Rational(den)
        return sympy.Rational(q), (), None, None
    try:
        pnum = sympy.Poly(num, *gens, domain="QQ")
        pden = sympy.Poly(den, *gens, domain="QQ")
    except sympy.PolynomialError as exc:  # pragma: no cover - guarded by grammar
        raise ExprError(f"cannot canonicalize: {exc}") from exc
    cn, pnum = pnum.primitive()
    cd, pden = pden.primitive()
    coeff = sympy.Rational(cn) / sympy.Rational(cd)
    if pden.LC() < 0:
        pden = -pden
        coeff = -coeff
    pnum = pnum * coeff
    if pnum.is_zero:
        return sympy.Integer(0), (), None, None
    canon = pnum.as_expr() / pden.as_expr()
    return canon, gens, pnum, pden


def _rebuild_atoms(sx: sympy.Expr) -> sympy.Expr:
    """Canonicalize arguments of function atoms, bottom-up."""

    def walk(node):
        if isinstance(node, sympy.Derivative):
            return node  # argument is a bare variable by construction
        if isinstance(node, sympy.Function):
            canon_arg, _, _, _ = _canonical(node.args[0])
            return type(node)(canon_arg)
        if node.is_Atom:
            return node
        return node.func(*[walk(a) for a in node.args])

    return walk(sx)


class Expr:
    """Immutable expression in canonical rational normal form."""

    __slots__ = ("_s", "_gens", "_num", "_den", "_text")

    def __init__(self, sx: sympy.Expr):
        canon, gens, num, den = _canonical(sympy.sympify(sx))
        object.__setattr__(self, "_s", canon)
        object.__setattr__(self, "_gens", gens)
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_text", None)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Expr is immutable")

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        return Expr(self._s + _coerce(other)._s)

    __radd__ = __add__

    def __sub__(self, other):
        return Expr(self._s - _coerce(other)._s)

    def __rsub__(self, other):
        return Expr(_coerce(other)._s - self._s)

    def __mul__(self, other):
        return Expr(self._s * _coerce(other)._s)

    __rmul__ = __mul__

    def __truediv__(self, other):
        d = _coerce(other)
        if d.is_zero_form():
            raise PoleError("division by zero expression")
        return Expr(self._s / d._s)

    def __rtruediv__(self, other):
        if self.is_zero_form():
            raise PoleError("division by zero expression")
        return Expr(_coerce(other)._s / self._s)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ExprError("only integer powers are supported")
        if k < 0 and self.is_zero_form():
            raise PoleError("zero raised to a negative power")
        return Expr(self._s ** k)

    def __neg__(self):
        return Expr(-self._s)

    def __pos__(self):
        return self

    # -- identity -----------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, (Expr, int, Fraction)):
            return NotImplemented
        return self._s == _coerce(other)._s

    def __hash__(self):
        return hash(self._s)

    def __repr__(self):
        return f"Expr({render(self)!r})"

    def __str__(self):
        return render(self)

    def is_zero_form(self) -> bool:
        """True when the canonical form is literally 0."""
        return self._s is sympy.S.Zero or self._s == 0

    def is_rational_constant(self) -> bool:
        return not self._gens

    def as_fraction(self) -> Fraction:
        if self._gens:
            raise ExprError("not a constant")
        return Fraction(int(self._s.p), int(self._s.q))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, int):
        return Expr(sympy.Integer(x))
    if isinstance(x, Fraction):
        return Expr(sympy.Rational(x.numerator, x.denominator))
    raise ExprError(f"cannot interpret {x!r} as an expression")


def number(value) -> Expr:
    """Expr from an int or Fraction."""
    return _coerce(value if not isinstance(value, str) else Fraction(value))


def var(name: str) -> Expr:
    if not _is_name(name):
        raise ExprError(f"invalid variable name {name!r}")
    return Expr(_sym(name))


def opaque(fname: str, varname: str, order: int = 0) -> Expr:
    """Application of an opaque univariate function, or a derivative of it."""
    if not _is_name(fname) or not _is_name(varname):
        raise ExprError("invalid name")
    head = _opaque_head(fname)
    x = _sym(varname)
    app = head(x)
    if order == 0:
        return Expr(app)
    if order < 0:
        raise ExprError("derivative order must be nonnegative")
    return Expr(sympy.Derivative(app, (x, order)))


def _is_name(s: str) -> bool:
    return s.isidentifier() and s.isascii()


# ---------------------------------------------------------------------------
# parser


def parse(text: str, opaque: Iterable[str] = ()) -> Expr:
    """Parse *text* into a canonical Expr.

    ``opaque`` whitelists names usable as opaque univariate functions;
    anything else followed by '(' must be one of the elementary functions.
    """
    toks = _tokenize(text)
    state = _ParseState(toks, text, frozenset(opaque))
    sx = state.parse_expr()
    tok = state.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos)
    return Expr(sx)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode("utf-8"))


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        pos = _byte_offset(text, i)
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                raise ExprSyntaxError("decimal literals are not supported", _byte_offset(text, j))
            toks.append(_Tok("int", text[i:j], pos))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            k = j
            while k < n and text[k] == "'":
                k += 1
            toks.append(_Tok("name", text[i:k], pos))
            i = k
        elif c in "+-*/^()":
            toks.append(_Tok(c, c, pos))
            i += 1
        elif c == ".":
            raise ExprSyntaxError("decimal literals are not supported", pos)
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", pos)
    toks.append(_Tok("end", "", _byte_offset(text, n)))
    return toks


class _ParseState:
    def __init__(self, toks, text, opaque):
        self.toks = toks
        self.i = 0
        self.text = text
        self.opaque = opaque

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.take()
        if t.kind != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {t.text!r}", t.pos)
        return t

    def parse_expr(self) -> sympy.Expr:
        if self.peek().kind == "-":
            self.take()
            node = -self.parse_term()
        else:
            node = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            rhs = self.parse_term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def parse_term(self) -> sympy.Expr:
        node = self.parse_factor()
        while self.peek().kind in ("*", "/"):
            op = self.take()
            rhs = self.parse_factor()
            if op.kind == "/":
                if rhs == 0:
                    raise PoleError("division by zero")
                node = node / rhs
            else:
                node = node * rhs
        return node

    def parse_factor(self) -> sympy.Expr:
        node = self.parse_base()
        if self.peek().kind == "^":
            self.take()
            negative = False
            if self.peek().kind == "-":
                self.take()
                negative = True
            t = self.expect("int")
            k = int(t.text)
            if negative:
                k = -k
            if k < 0 and node == 0:
                raise PoleError("zero raised to a negative power")
            node = node ** k
        return node

    def parse_base(self) -> sympy.Expr:
        t = self.take()
        if t.kind == "int":
            return sympy.Integer(int(t.text))
        if t.kind == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == "name":
            name = t.text
            primes = len(name) - len(name.rstrip("'"))
            base = name.rstrip("'")
            if self.peek().kind == "(":
                self.take()
                arg = self.parse_expr()
                self.expect(")")
                if primes == 0 and base in _FUNCS:
                    return _FUNCS[base](arg)
                if base in self.opaque:
                    if not (arg.is_Symbol):
                        raise ExprSyntaxError(
                            f"opaque function {base!r} takes a bare variable", t.pos)
                    app = _opaque_head(base)(arg)
                    if primes:
                        return sympy.Derivative(app, (arg, primes))
                    return app
                raise ExprSyntaxError(f"unknown function {base!r}", t.pos)
            if primes:
                raise ExprSyntaxError("derivative marks need a function call", t.pos)
            return _sym(name)
        raise ExprSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.pos)


# ---------------------------------------------------------------------------
# renderer


def _render_atom(atom: sympy.Expr) -> str:
    if atom.is_Symbol:
        return str(atom)
    if isinstance(atom, sympy.Derivative):
        inner = atom.args[0]
        fname = type(inner).__name__
        marks = "'" * int(atom.derivative_count)
        return fname + marks + "(" + str(inner.args[0]) + ")"
    if isinstance(atom, sympy.Function):
        head = type(atom)
        fname = _FUNC_NAMES.get(head, head.__name__)
        return f"{fname}({render(Expr(atom.args[0]))})"
    raise ExprError(f"cannot render atom {atom!r}")  # pragma: no cover


def _render_coeff_mono(coeff: Fraction, mono: str) -> str:
    p, q = abs(coeff.numerator), coeff.denominator
    if not mono:
        return f"{p}/{q}" if q != 1 else f"{p}"
    head = "" if p == 1 else f"{p}*"
    tail = "" if q == 1 else f"/{q}"
    return f"{head}{mono}{tail}"


def _poly_terms(p: sympy.Poly) -> list[tuple[Fraction, str]]:
    gens = p.gens
    out = []
    for exps, c in p.terms():
        coeff = Fraction(int(c.numerator), int(c.denominator))
        parts = []
        for g, e in zip(gens, exps):
            if e == 0:
                continue
            gs = _render_atom(g)
            parts.append(gs if e == 1 else f"{gs}^{e}")
        out.append((coeff, "*".join(parts)))
    return out


def _poly_string(p: sympy.Poly) -> str:
    terms = _poly_terms(p)
    if not terms:
        return "0"
    chunks = []
    for idx, (coeff, mono) in enumerate(terms):
        body = _render_coeff_mono(coeff, mono)
        if idx == 0:
            chunks.append(f"-{body}" if coeff < 0 else body)
        else:
            chunks.append(f" - {body}" if coeff < 0 else f" + {body}")
    return "".join(chunks)


def render(e: Expr) -> str:
    """Deterministic text form; parse(render(e)) == e."""
    if e._text is not None:
        return e._text
    if not e._gens:
        c = e._s
        text = str(Fraction(int(c.p), int(c.q)))
    else:
        num, den = e._num, e._den
        if den.is_one:
            text = _poly_string(num)
        else:
            nterms = _poly_terms(num)
            dterms = _poly_terms(den)
            nstr = _poly_string(num)
            if len(nterms) > 1:
                nstr = f"({nstr})"
            dstr = _poly_string(den)
            dcoeff, dmono = dterms[0]
            simple_den = len(dterms) == 1 and dcoeff == 1 and "*" not in dmono and dmono
            if not simple_den:
                dstr = f"({dstr})"
            text = f"{nstr}/{dstr}"
    object.__setattr__(e, "_text", text)
    return text


# ---------------------------------------------------------------------------
# calculus and substitution


def diff(e: Expr, *names: str) -> Expr:
    """Partial derivative along each name in turn."""
    sx = e._s
    for name in names:
        sx = sympy.diff(sx, _sym(name))
    return Expr(sx)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution of variables by expressions.

    Variables that sit inside an opaque function application can only be
    renamed to other variables (opaque arguments stay bare variables).
    """
    subs = {}
    for name, val in mapping.items():
        v = _coerce(val)
        subs[_sym(name)] = v._s
    opaque_args = set()
    for atom in e._s.atoms(AppliedUndef):
        opaque_args.add(atom.args[0])
    for atom in e._s.atoms(sympy.Derivative):
        opaque_args.add(atom.variables[0])
    for v in opaque_args:
        if v in subs and not subs[v].is_Symbol:
            raise ExprError(
                "cannot substitute a composite expression into an opaque function argument")
    sx = e._s.xreplace(subs)
    return Expr(sx)


def instantiate(e: Expr, bodies: Mapping[str, tuple[str, Expr]]) -> Expr:
    """Replace opaque functions by concrete expressions.

    ``bodies[f] = (s, body)`` replaces f(v) by body[s := v] and every
    derivative atom f^(k)(v) by the k-th derivative of body evaluated at v.
    """
    sx = e._s
    repl = {}
    for atom in sx.atoms(sympy.Derivative):
        inner = atom.args[0]
        fname = type(inner).__name__
        if fname in bodies:
            pname, body = bodies[fname]
            k = int(atom.derivative_count)
            dbody = body
            for _ in range(k):
                dbody = diff(dbody, pname)
            repl[atom] = substitute(dbody, {pname: Expr(inner.args[0])})._s
    for atom in sx.atoms(AppliedUndef):
        fname = type(atom).__name__
        if fname in bodies:
            pname, body = bodies[fname]
            repl[atom] = substitute(body, {pname: Expr(atom.args[0])})._s
    return Expr(sx.xreplace(repl))


def variables(e: Expr) -> list[str]:
    return sorted(str(s) for s in e._s.free_symbols)


def opaque_names(e: Expr) -> set[str]:
    names = set()
    for atom in e._s.atoms(AppliedUndef):
        names.add(type(atom).__name__)
    for atom in e._s.atoms(sympy.Derivative):
        names.add(type(atom.args[0]).__name__)
    return names


def is_rational_function(e: Expr) -> bool:
    """No transcendental or opaque atoms at all."""
    return all(g.is_Symbol for g in e._gens)


def numerator(e: Expr) -> Expr:
    if not e._gens:
        return Expr(sympy.Integer(e._s.p))
    return Expr(e._num.as_expr())


def denominator(e: Expr) -> Expr:
    if not e._gens:
        return Expr(sympy.Integer(e._s.q))
    return Expr(e._den.as_expr())


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Interval:
    """Closed interval with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ExprError("invalid interval (lo > hi)")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def abs_min(self) -> Fraction:
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    def abs_max(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))


def _raw_to_fraction(raw) -> Fraction:
    # raw is a libmp tuple (sign, mantissa, exponent, bitcount); mantissa 0
    # with nonzero exponent encodes inf/nan
    sign, man, exp, _ = raw
    if man == 0:
        if exp == 0:
            return Fraction(0)
        raise PoleError("evaluation produced a non-finite value")
    val = Fraction(man) * (Fraction(2) ** exp if exp >= 0 else Fraction(1, 2 ** (-exp)))
    return -val if sign else val


def _frac_iv(ctx, q: Fraction):
    return ctx.mpf(q.numerator) / ctx.mpf(q.denominator)


def _iv_eval(sx: sympy.Expr, env: Mapping, ctx) -> "mpmath.iv.mpf":
    if sx.is_Rational:
        return _frac_iv(ctx, Fraction(int(sx.p), int(sx.q)))
    if sx.is_Symbol:
        return env[sx]
    if sx.is_Add:
        total = ctx.mpf(0)
        for a in sx.args:
            total = total + _iv_eval(a, env, ctx)
        return total
    if sx.is_Mul:
        total = ctx.mpf(1)
        for a in sx.args:
            total = total * _iv_eval(a, env, ctx)
        return total
    if sx.is_Pow:
        base = _iv_eval(sx.base, env, ctx)
        k = int(sx.exp)
        if k >= 0:
            out = ctx.mpf(1)
            for _ in range(k):
                out = out * base
            return out
        if base.a <= 0 <= base.b:
            raise PoleError("interval denominator straddles zero")
        out = ctx.mpf(1)
        for _ in range(-k):
            out = out * base
        return ctx.mpf(1) / out
    if isinstance(sx, sympy.Function):
        head = type(sx)
        a = _iv_eval(sx.args[0], env, ctx)
        if head is sympy.sin:
            return ctx.sin(a)
        if head is sympy.cos:
            return ctx.cos(a)
        if head is sympy.tan:
            c = ctx.cos(a)
            if c.a <= 0 <= c.b:
                raise PoleError("tan evaluated across a pole")
            return ctx.sin(a) / c
        if head is sympy.exp:
            return ctx.exp(a)
        if head is sympy.log:
            if a.a <= 0:
                raise PoleError("ln of a non-positive interval")
            return ctx.log(a)
        if head is sympy.sinh:
            return (ctx.exp(a) - ctx.exp(-a)) / 2
        if head is sympy.cosh:
            return (ctx.exp(a) + ctx.exp(-a)) / 2
        if head is sympy.tanh:
            ep, em = ctx.exp(a), ctx.exp(-a)
            return (ep - em) / (ep + em)
    raise ExprError(f"cannot evaluate {sx!r} numerically")


def eval_at(e: Expr, assignment: Mapping[str, Fraction], precision: int = 256):
    """Evaluate at exact rational values.

    Returns an exact Fraction when the expression is a rational function,
    otherwise a validated enclosing Interval computed with interval
    arithmetic at ``precision`` bits.  Raises PoleError on a zero
    denominator and ExprError if a variable is missing or the expression
    contains opaque atoms.
    """
    if opaque_names(e):
        raise ExprError("cannot evaluate opaque function symbols; instantiate them first")
    missing = [v for v in variables(e) if v not in assignment]
    if missing:
        raise ExprError(f"missing assignment for {missing[0]!r}")
    vals = {name: Fraction(value) for name, value in assignment.items()}
    if is_rational_function(e):
        return _eval_rational(e, vals)
    ctx = mpmath.iv
    old = ctx.prec
    try:
        ctx.prec = max(precision, 64)
        env = {_sym(name): _frac_iv(ctx, q) for name, q in vals.items()}
        res = _iv_eval(e._s, env, ctx)
    finally:
        ctx.prec = old
    raw_lo, raw_hi = res._mpi_
    return Interval(_raw_to_fraction(raw_lo), _raw_to_fraction(raw_hi))


def _eval_rational(e: Expr, vals: Mapping[str, Fraction]) -> Fraction:
    if not e._gens:
        return e.as_fraction()

    def poly_val(p: sympy.Poly) -> Fraction:
        total = Fraction(0)
        for exps, c in p.terms():
            term = Fraction(int(c.numerator), int(c.denominator))
            for g, k in zip(p.gens, exps):
                if k:
                    term *= vals[str(g)] ** k
            total += term
        return total

    den = poly_val(e._den)
    if den == 0:
        raise PoleError("zero denominator at the given point")
    return poly_val(e._num) / den


# ---------------------------------------------------------------------------
# zero testing


@dataclass(frozen=True)
class ProvablyZero:
    """Exact verdict: canonical form is zero."""

    zero: bool = True
    proved: bool = True

    def __bool__(self):
        return True


@dataclass(frozen=True)
class ProvablyNonzero:
    zero: bool = False
    proved: bool = True

    def __bool__(self):
        return False


@dataclass(frozen=True)
class ProbablyZero:
    samples: int
    zero: bool = True
    proved: bool = False

    def __bool__(self):
        return True


@dataclass(frozen=True)
class ProbablyNonzero:
    witness: dict
    zero: bool = False
    proved: bool = False

    def __bool__(self):
        return False


_TRIG_SQ = (
    (sympy.sin, lambda a: 1 - sympy.cos(a) ** 2),
    (sympy.cosh, lambda a: 1 + sympy.sinh(a) ** 2),
)


def _reduce_transcendental(sx: sympy.Expr) -> sympy.Expr:
    """Bounded rewrite towards a rational normal form.

    tan and tanh become sin/cos and sinh/cosh, even powers of sin and cosh
    are eliminated through the Pythagorean identities, exponentials are
    combined, and the result is cancelled.  Each pass is bounded, so this
    always terminates; it proves many common identities but is not a
    decision procedure.
    """
    sx = sx.replace(lambda q: isinstance(q, sympy.tan),
                    lambda q: sympy.sin(q.args[0]) / sympy.cos(q.args[0]))
    sx = sx.replace(lambda q: isinstance(q, sympy.tanh),
                    lambda q: sympy.sinh(q.args[0]) / sympy.cosh(q.args[0]))
    sx = sympy.together(sx)
    num, den = sx.as_numer_denom()

    def eliminate(p):
        p = sympy.expand(p)
        for head, image in _TRIG_SQ:
            changed = True
            guard = 0
            while changed and guard < 64:
                guard += 1
                new = p.replace(
                    lambda q: q.is_Pow and isinstance(q.base, head) and q.exp.is_Integer and q.exp >= 2,
                    lambda q: image(q.base.args[0]) ** (int(q.exp) // 2) * q.base ** (int(q.exp) % 2),
                )
                new = sympy.expand(new)
                changed = new != p
                p = new
        return p

    num = eliminate(num)
    den = eliminate(den)
    sx = sympy.powsimp(num, deep=True) / sympy.powsimp(den, deep=True)
    return sympy.cancel(sympy.together(sx))


def _sample_point(rng: random.Random, names: list[str]) -> dict[str, Fraction]:
    return {
        name: Fraction(rng.randint(-160, 160), rng.randint(1, 16))
        for name in names
    }


def is_zero(e: Expr, seed: int = 0, samples: int = 32,
            tol: Fraction = Fraction(1, 2 ** 64), precision: int = 256):
    """Decide whether *e* is identically zero.

    Rational expressions get an exact verdict from the canonical form.
    Transcendental expressions first go through a bounded rewrite; if that
    lands in the rational fragment the verdict is exact, otherwise the
    expression is evaluated with interval arithmetic at ``samples`` seeded
    random rational points.  Raises IndeterminateError when sampling cannot
    separate the value from zero.  Opaque function symbols are refused;
    instantiate them first.
    """
    if opaque_names(e):
        raise ExprError("is_zero does not accept opaque function symbols; instantiate them")
    if is_rational_function(e):
        return ProvablyZero() if e.is_zero_form() else ProvablyNonzero()
    reduced = _reduce_transcendental(e._s)
    try:
        re = Expr(reduced)
    except PoleError:
        re = e
    if is_rational_function(re):
        return ProvablyZero() if re.is_zero_form() else ProvablyNonzero()

    rng = random.Random(seed)
    names = variables(re)
    zero_samples = 0
    for _ in range(samples):
        point = None
        value = None
        for _attempt in range(40):
            candidate = _sample_point(rng, names)
            prec = precision
            while True:
                try:
                    value = eval_at(re, candidate, precision=prec)
                except PoleError:
                    value = None
                    break
                if value.abs_min() > tol or value.abs_max() <= tol or value.width <= tol:
                    break
                if prec >= 4096:
                    raise IndeterminateError(
                        "interval sampling cannot separate the value from zero")
                prec *= 2
            if value is not None:
                point = candidate
                break
        if point is None:
            raise IndeterminateError("all sample points were singular")
        if value.abs_min() > tol:
            return ProbablyNonzero(witness=point)
        zero_samples += 1
    return ProbablyZero(samples=zero_samples)


# ---------------------------------------------------------------------------
# antiderivatives


def antiderivative(e: Expr, name: str) -> Expr:
    """Indefinite integral in ``name`` for integrands rational in it.

    Raises NonRationalIntegrand when the variable appears inside a
    function atom, and NonElementaryAntiderivative when the closed form
    leaves the kernel fragment (arctangents, sums over roots, complex
    logarithms).  Logarithms of rational functions are fine.
    """
    x = _sym(name)
    sx = e._s
    if not sx.has(x):
        return Expr(sx * x)
    for atom in list(sx.atoms(sympy.Function)) + list(sx.atoms(sympy.Derivative)):
        if atom.has(x):
            raise NonRationalIntegrand(
                f"integrand is not rational in {name!r} (contains {_render_atom(atom)})")
    others = [a for a in _function_atoms(sx) if not a.has(x)]
    dummies = {a: sympy.Dummy(real=True) for a in others}
    back = {d: a for a, d in dummies.items()}
    core = sx.xreplace(dummies)
    try:
        F = ratint(core, x)
    except Exception as exc:
        raise NonElementaryAntiderivative(str(exc)) from exc
    if F.has(sympy.atan) or F.has(sympy.RootSum) or F.has(sympy.I) or F.has(sympy.atanh):
        raise NonElementaryAntiderivative(
            "antiderivative requires arctangents or root sums")
    F = F.xreplace(back)
    for lg in F.atoms(sympy.log):
        inner = lg.args[0]
        num, den = sympy.fraction(sympy.cancel(sympy.together(inner.xreplace(dummies))))
        if not (num.is_polynomial() and den.is_polynomial()):
            raise NonElementaryAntiderivative("logarithm of a non-rational expression")
    return Expr(F)
