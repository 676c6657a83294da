"""Overdetermined second-order linear systems in involutive form.

A system here prescribes every mixed second derivative of one unknown u
in n independent variables:

    u_{x_i x_j} = G^i_{ij} u_{x_i} + G^j_{ij} u_{x_j} - C_{ij} u,   i < j,

with coefficient functions of x only.  Entries are stored three-indexed
as gamma[(i, j, k)] = G^k_{ij} (1-based, i < j); k outside {i, j} is
legal input but must vanish for the system to be involutive.  The
two-index shorthand G_{ij} := G^j_{ij} (the coefficient of u_{x_j} in
the (i, j) equation) is what most formulas below are written in.

The module also covers the semilinear generalisation (right-hand sides
f_ij depending on x, u and the gradient), its cross-derivative
compatibility, the construction of such systems from split rank-2n
distributions with enough invariants, and the Lame potentials attached
to systems with C = 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import permutations, product

from dmzkit import expr as E
from dmzkit import geometry as G
from dmzkit.expr import Expr


class DmzError(ValueError):
    pass


def _zero() -> Expr:
    return E.number(0)


def _random_polynomial(param: str, rng) -> Expr:
    body = E.number(0)
    for k in range(4):
        c = rng.randint(-9, 9)
        if k == 3 and c == 0:
            c = rng.randint(1, 9)
        if c:
            body = body + E.number(c) * E.var(param) ** k
    return body


def zero_verdict(e: Expr, seed: int = 0, samples: int = 32,
                 precision: int = 256, trials: int = 3):
    """Kernel zero test that tolerates opaque function atoms.

    Expressions free of opaque functions go straight to is_zero.  When
    opaque atoms are present, each unknown function is replaced by a
    random cubic polynomial and the instantiated expression is tested;
    this repeats ``trials`` times with fresh polynomials.  A nonzero
    instantiation disproves the identity outright, so that verdict is
    returned as found; if every instantiation vanishes, the verdict is
    reported as sampled rather than proved, no matter what the
    individual runs said.
    """
    names = sorted(E.opaque_names(e))
    if not names:
        return E.is_zero(e, seed=seed, samples=samples, precision=precision)
    total = 0
    for trial in range(trials):
        rng = random.Random(f"opaque:{seed}:{trial}:{','.join(names)}")
        bodies = {nm: ("s", _random_polynomial("s", rng)) for nm in names}
        verdict = E.is_zero(E.instantiate(e, bodies), seed=seed + trial,
                            samples=samples, precision=precision)
        if not verdict.zero:
            return verdict
        total += getattr(verdict, "samples", samples)
    return E.ProbablyZero(samples=total)


class DmzSystem:
    """Coefficients of one linear system; indices are 1-based."""

    def __init__(self, coords, gamma=None, c=None):
        self.coords = tuple(coords)
        if len(self.coords) < 2:
            raise DmzError("need at least two independent variables")
        self.n = len(self.coords)
        self._gamma: dict[tuple[int, int, int], Expr] = {}
        self._c: dict[tuple[int, int], Expr] = {}
        for (i, j, k), val in (gamma or {}).items():
            self.set_gamma(i, j, k, val)
        for (i, j), val in (c or {}).items():
            self.set_c(i, j, val)

    def _check_index(self, i):
        if not 1 <= i <= self.n:
            raise DmzError(f"index {i} out of range 1..{self.n}")

    def set_gamma(self, i, j, k, val: Expr):
        for idx in (i, j, k):
            self._check_index(idx)
        if i == j:
            raise DmzError("gamma indices (i, j) must be distinct (no diagonal equations)")
        a, b = min(i, j), max(i, j)
        if val.is_zero_form():
            self._gamma.pop((a, b, k), None)
        else:
            self._gamma[(a, b, k)] = val

    def set_c(self, i, j, val: Expr):
        self._check_index(i)
        self._check_index(j)
        if i == j:
            raise DmzError("C indices must be distinct")
        a, b = min(i, j), max(i, j)
        if val.is_zero_form():
            self._c.pop((a, b), None)
        else:
            self._c[(a, b)] = val

    def gamma3(self, i, j, k) -> Expr:
        for idx in (i, j, k):
            self._check_index(idx)
        a, b = min(i, j), max(i, j)
        return self._gamma.get((a, b, k), _zero())

    def gamma2(self, i, j) -> Expr:
        """Two-index shorthand G_{ij} = G^j_{ij}, the u_{x_j} coefficient."""
        if i == j:
            raise DmzError("two-index gamma needs distinct indices")
        return self.gamma3(i, j, j)

    def c2(self, i, j) -> Expr:
        self._check_index(i)
        self._check_index(j)
        a, b = min(i, j), max(i, j)
        return self._c.get((a, b), _zero())

    def off_index_entries(self):
        out = []
        for (i, j, k), val in sorted(self._gamma.items()):
            if k not in (i, j):
                out.append(((i, j, k), val))
        return out

    def pairs(self):
        return [(i, j) for i in range(1, self.n + 1) for j in range(i + 1, self.n + 1)]

    def is_rational(self) -> bool:
        vals = list(self._gamma.values()) + list(self._c.values())
        return all(E.is_rational_function(v) for v in vals)

    def map_coefficients(self, fn) -> "DmzSystem":
        out = DmzSystem(self.coords)
        for (i, j, k), val in self._gamma.items():
            out.set_gamma(i, j, k, fn(val))
        for (i, j), val in self._c.items():
            out.set_c(i, j, fn(val))
        return out


def residual_operator_apply(S: DmzSystem, u: Expr) -> list[tuple[tuple[int, int], Expr]]:
    """Apply each equation's operator to a candidate solution u(x)."""
    out = []
    for i, j in S.pairs():
        xi, xj = S.coords[i - 1], S.coords[j - 1]
        r = (E.diff(u, xi, xj)
             - S.gamma2(j, i) * E.diff(u, xi)
             - S.gamma2(i, j) * E.diff(u, xj)
             + S.c2(i, j) * u)
        for k in range(1, S.n + 1):
            if k in (i, j):
                continue
            off = S.gamma3(i, j, k)
            if not off.is_zero_form():
                r = r - off * E.diff(u, S.coords[k - 1])
        out.append(((i, j), r))
    return out


@dataclass(frozen=True)
class Residual:
    family: str
    indices: tuple[int, ...]
    value: Expr


def _dedup_canonical(residuals):
    """Drop residuals whose canonical form already appeared.

    Index symmetries make several triples produce the same expression;
    one representative per canonical form is kept (first wins).
    """
    seen = {}
    for r in residuals:
        key = E.render(r.value)
        if key not in seen:
            seen[key] = r
    return list(seen.values())


def integrability_residuals(S: DmzSystem) -> list[Residual]:
    """Cross-differentiation obstructions for the linear system.

    Vanishing of every residual (together with all off-index gamma
    entries) is equivalent to involutivity; three families arise from
    matching the u_{x_i}, u_{x_j} and u coefficients of the two ways of
    computing each third-order mixed derivative.  Residuals that agree
    up to overall sign are reported once.  For n = 2 the list is empty.
    """
    out = []

    def d(e, idx):
        return E.diff(e, S.coords[idx - 1])

    g = S.gamma2
    c = S.c2
    for i, j, k in permutations(range(1, S.n + 1), 3):
        # u_{x_j} coefficient of D_k applied to the (i,j) equation
        out.append(Residual(
            "gradient", (i, j, k),
            d(g(i, j), k) - g(i, k) * g(k, j) - g(k, i) * g(i, j)
            + g(i, j) * g(k, j) + c(i, k)))
        # curl in the first index
        out.append(Residual(
            "curl", (i, j, k),
            d(g(i, j), k) - d(g(k, j), i)))
        # zeroth-order coefficient
        out.append(Residual(
            "potential", (i, j, k),
            d(c(i, j), k) - d(c(i, k), j)
            + g(j, i) * c(i, k) - g(k, i) * c(i, j)
            + (g(i, j) - g(i, k)) * c(j, k)))
    return _dedup_canonical(out)


@dataclass
class InvolutivityReport:
    ok: bool
    residuals: list[tuple[Residual, object]]
    off_index: list[tuple[tuple[int, int, int], Expr]]
    n: int

    @property
    def general_solution_note(self) -> str:
        return f"solutions depend on {self.n} functions of one variable"

    def first_failure(self):
        for res, verdict in self.residuals:
            if not verdict.zero:
                return res, verdict
        return None

    def __bool__(self):
        return self.ok


def is_involutive(S: DmzSystem, seed: int = 0, samples: int = 32,
                  precision: int = 256) -> InvolutivityReport:
    """Check all integrability residuals with the kernel zero test."""
    off = S.off_index_entries()
    checked = []
    ok = not off
    for res in integrability_residuals(S):
        verdict = zero_verdict(res.value, seed=seed, samples=samples,
                               precision=precision)
        checked.append((res, verdict))
        ok = ok and verdict.zero
    return InvolutivityReport(ok=ok, residuals=checked, off_index=off, n=S.n)


# ---------------------------------------------------------------------------
# Lame potentials


class LamePotentials:
    """Either explicit potentials h_i or their squares s_i = h_i^2.

    A squares-backed instance supports everything that is rational in the
    squares (the residual systems below); operations that need h itself,
    like building a wave matrix, require explicit potentials.
    """

    def __init__(self, coords, h=None, squares=None):
        self.coords = tuple(coords)
        self.n = len(self.coords)
        if (h is None) == (squares is None):
            raise DmzError("provide exactly one of h or squares")
        self._h = tuple(h) if h is not None else None
        self._squares = tuple(squares) if squares is not None else None
        count = len(self._h) if self._h is not None else len(self._squares)
        if count != self.n:
            raise DmzError("need one potential per coordinate")

    @classmethod
    def from_squares(cls, coords, squares) -> "LamePotentials":
        return cls(coords, squares=squares)

    @property
    def explicit(self) -> bool:
        return self._h is not None

    def h(self, i: int) -> Expr:
        if self._h is None:
            raise DmzError("potentials are squares-backed; explicit h unavailable")
        return self._h[i - 1]

    def square(self, i: int) -> Expr:
        if self._squares is not None:
            return self._squares[i - 1]
        return self._h[i - 1] ** 2


def verify_lame(S: DmzSystem, pots: LamePotentials, seed: int = 0) -> bool:
    """h_j * G_{ij} == d h_j / d x_i for all i != j."""
    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            if i == j:
                continue
            resid = pots.h(j) * S.gamma2(i, j) - E.diff(pots.h(j), S.coords[i - 1])
            if not E.is_zero(resid, seed=seed).zero:
                return False
    return True


def lame_potentials(S: DmzSystem, diagonal=None) -> LamePotentials:
    """Reconstruct potentials h_j with G_{ij} = d(ln h_j)/d x_i, i != j.

    Integrates the rows of the connection one variable at a time and
    exponentiates.  Without ``diagonal``, x_j enters row j only as a
    parameter: nothing is prescribed in the x_j direction, so h_j may
    pick up x_j dependence from the other entries and is unique up to a
    factor depending on x_j alone.  Passing ``diagonal`` (one Expr per
    coordinate) prescribes d(ln h_j)/d x_j too and restores full
    closedness as a requirement.  The result is normalised so the first
    nonzero canonical coefficient of each h_j is 1; failures to
    integrate in closed form raise NonRationalIntegrand or
    NonElementaryAntiderivative.
    """
    import sympy

    if diagonal is not None and len(diagonal) != S.n:
        raise DmzError("diagonal needs one entry per coordinate")

    def omega(i, j):
        if i == j:
            return diagonal[j - 1] if diagonal is not None else _zero()
        return S.gamma2(i, j)

    hs = []
    for j in range(1, S.n + 1):
        directions = [i for i in range(1, S.n + 1)
                      if i != j or diagonal is not None]
        F = _zero()
        for i in directions:
            xi = S.coords[i - 1]
            integrand = omega(i, j) - E.diff(F, xi)
            if integrand.is_zero_form():
                continue
            F = F + E.antiderivative(integrand, xi)
        for i in directions:
            check = E.diff(F, S.coords[i - 1]) - omega(i, j)
            if not check.is_zero_form() and not E.is_zero(check).zero:
                raise DmzError(
                    f"connection row {j} is not closed; cannot build a potential")
        h_sym = sympy.powsimp(sympy.exp(F._s), force=True, deep=True)
        h_sym = sympy.expand_power_exp(h_sym)
        h_sym = sympy.powsimp(h_sym, force=True)
        for p in h_sym.atoms(sympy.Pow):
            if not p.exp.is_Integer:
                raise E.NonElementaryAntiderivative(
                    "potential requires a fractional power")
        h = Expr(h_sym)
        if E.is_rational_function(h):
            h = _normalize_leading(h)
        hs.append(h)
    return LamePotentials(S.coords, h=hs)


def _normalize_leading(h: Expr) -> Expr:
    num = E.numerator(h)
    lead = _leading_coefficient(num)
    if lead is None:
        return h
    return h / E.number(lead)


def _leading_coefficient(num: Expr):
    if num.is_zero_form():
        return None
    if num.is_rational_constant():
        return num.as_fraction()
    poly = num._num
    coeff = poly.terms()[0][1]
    from fractions import Fraction

    return Fraction(int(coeff.numerator), int(coeff.denominator))


# ---------------------------------------------------------------------------
# semilinear generalisation


class GdmzSystem:
    """u_{x_i x_j} = f_ij(x, u, u_1..u_n) with f stored for i < j.

    Gradient variables are named by appending the coordinate position to
    the dependent name: u1, u2, ...
    """

    def __init__(self, coords, dep: str = "u", f=None):
        self.coords = tuple(coords)
        self.n = len(self.coords)
        self.dep = dep
        self.gradient = tuple(f"{dep}{i}" for i in range(1, self.n + 1))
        self._f: dict[tuple[int, int], Expr] = {}
        for (i, j), val in (f or {}).items():
            self.set_f(i, j, val)

    def set_f(self, i, j, val: Expr):
        if i == j:
            raise DmzError("f indices must be distinct")
        a, b = min(i, j), max(i, j)
        allowed = set(self.coords) | {self.dep} | set(self.gradient)
        extra = set(E.variables(val)) - allowed
        if extra:
            raise DmzError(f"f[{i}][{j}] uses undeclared names {sorted(extra)}")
        self._f[(a, b)] = val

    def f(self, i, j) -> Expr:
        a, b = min(i, j), max(i, j)
        return self._f.get((a, b), _zero())

    def pairs(self):
        return [(i, j) for i in range(1, self.n + 1) for j in range(i + 1, self.n + 1)]


def gdmz_compatibility_residuals(Gs: GdmzSystem) -> list[Residual]:
    """D_k f_ij - D_j f_ik expressed in x, u, gradient, and the formal
    repeated derivatives u_{jj}, u_{kk} (named <dep><j><j>); a residual
    must vanish identically in all of them.
    """
    out = []
    coords = Gs.coords
    dep = Gs.dep

    def total_derivative(expr: Expr, m: int) -> Expr:
        xm = coords[m - 1]
        um = Gs.gradient[m - 1]
        res = E.diff(expr, xm) + E.var(um) * E.diff(expr, dep)
        for l in range(1, Gs.n + 1):
            ul = Gs.gradient[l - 1]
            if l == m:
                second = E.var(f"{dep}{m}{m}")
            else:
                second = Gs.f(l, m)
            res = res + second * E.diff(expr, ul)
        return res

    for i in range(1, Gs.n + 1):
        for j in range(1, Gs.n + 1):
            for k in range(j + 1, Gs.n + 1):
                if i in (j, k):
                    continue
                r = total_derivative(Gs.f(i, j), k) - total_derivative(Gs.f(i, k), j)
                out.append(Residual("cross-derivative", (i, j, k), r))
    return out


def gdmz_formal_obstructions(Gs: GdmzSystem) -> list[str]:
    """Names of surviving formal second-derivative symbols, if any."""
    bad = set()
    formal = {f"{Gs.dep}{m}{m}" for m in range(1, Gs.n + 1)}
    for res in gdmz_compatibility_residuals(Gs):
        bad |= set(E.variables(res.value)) & formal
    return sorted(bad)


def gdmz_to_dmz(Gs: GdmzSystem) -> DmzSystem:
    """Extract linear coefficients when every f_ij is linear-homogeneous
    in u and its gradient with x-dependent coefficients: the u_{x_k}
    coefficient becomes the corresponding three-index connection entry
    and the u coefficient becomes -C_ij."""
    S = DmzSystem(Gs.coords)
    u = Gs.dep
    jet_names = set(Gs.gradient) | {u}
    for i, j in Gs.pairs():
        f = Gs.f(i, j)
        rest = f
        for k in range(1, Gs.n + 1):
            uk = Gs.gradient[k - 1]
            coeff = E.diff(f, uk)
            bad = set(E.variables(coeff)) & jet_names
            if bad:
                raise DmzError(
                    f"f[{i}][{j}] is not linear: u_{{x_{k}}} coefficient "
                    f"{E.render(coeff)} still involves {sorted(bad)}")
            if not coeff.is_zero_form():
                S.set_gamma(i, j, k, coeff)
            rest = rest - coeff * E.var(uk)
        cval = E.diff(f, u)
        bad = set(E.variables(cval)) & jet_names
        if bad:
            raise DmzError(
                f"f[{i}][{j}] is not linear: u coefficient {E.render(cval)} "
                f"still involves {sorted(bad)}")
        rest = rest - cval * E.var(u)
        if not rest.is_zero_form():
            raise DmzError(
                f"f[{i}][{j}] has a nonlinear or inhomogeneous part: {E.render(rest)}")
        S.set_c(i, j, -cval)
    return S


def dmz_to_gdmz(S: DmzSystem, dep: str = "u") -> GdmzSystem:
    """Render a linear system as a semilinear one (right-hand sides)."""
    clash = set(S.coords) & ({dep} | {f"{dep}{i}" for i in range(1, S.n + 1)})
    if clash:
        raise DmzError(f"coordinate names collide with jet names {sorted(clash)}")
    f = {}
    for i, j in S.pairs():
        rhs = -S.c2(i, j) * E.var(dep)
        for k in range(1, S.n + 1):
            coeff = S.gamma3(i, j, k)
            if not coeff.is_zero_form():
                rhs = rhs + coeff * E.var(f"{dep}{k}")
        f[(i, j)] = rhs
    return GdmzSystem(S.coords, dep=dep, f=f)


# ---------------------------------------------------------------------------
# construction from adapted distributions


@dataclass
class ConstructionResult:
    gdmz: GdmzSystem
    invariant_derivatives: list[Expr]
    vertical_bundle: list[G.VectorField]
    report: list[str] = field(default_factory=list)


def construct_gdmz(chart: G.Chart, parts, invariant: Expr,
                   inverse_subst: dict[str, Expr], dep: str = "u",
                   seed: int = 0, check_hyperbolic: bool = True) -> ConstructionResult:
    """Build the semilinear system attached to a split distribution.

    ``parts`` is a list of n pairs of vector fields; each pair must
    consist of one horizontal field (unit coefficient on exactly one base
    coordinate and zero on the others) and one vertical partner (zero on
    all base coordinates).  ``invariant`` is the scalar whose repeated
    horizontal derivatives produce the right-hand sides; ``inverse_subst``
    rewrites chart coordinates in terms of the base coordinates, ``dep``
    and the gradient names.  Extensive checks run along the way and raise
    DmzError with a description on failure.
    """
    n = len(parts)
    if any(len(pair) != 2 for pair in parts):
        raise DmzError("each part must consist of exactly two vector fields")
    if check_hyperbolic:
        hyp = G.check_n_hyperbolic(chart, parts, seed)
        if not hyp.ok:
            raise DmzError("splitting fails the hyperbolicity checks: "
                           + "; ".join(hyp.messages))
    base_idx = _identify_base(chart, parts, invariant, seed)
    base_names = [chart.names[base_idx[i]] for i in range(n)]

    horizontals = []
    verticals = []
    for p, pair in enumerate(parts):
        h = v = None
        for f in pair:
            comps_on_base = [f.components[base_idx[q]] for q in range(n)]
            if all(c.is_zero_form() for c in comps_on_base):
                v = f
            elif (comps_on_base[p] == E.number(1)
                  and all(c.is_zero_form() for q, c in enumerate(comps_on_base) if q != p)):
                h = f
        if h is None or v is None:
            raise DmzError(f"part {p + 1} is not in adapted shape "
                           "(one horizontal with unit base coefficient, one vertical)")
        horizontals.append(h)
        verticals.append(v)

    vertical_bundle = list(verticals)
    for v, h in zip(verticals, horizontals):
        vertical_bundle.append(G.lie_bracket(v, h))
    A = G.Distribution(chart, vertical_bundle)
    if A.rank != 2 * n:
        raise DmzError(f"vertical bundle has rank {A.rank}, expected {2 * n}")
    for i in range(len(vertical_bundle)):
        for j in range(i + 1, len(vertical_bundle)):
            br = G.lie_bracket(vertical_bundle[i], vertical_bundle[j])
            if not br.is_zero_form() and not A.contains(br, seed):
                raise DmzError("vertical bundle is not integrable")

    invariants = [E.var(nm) for nm in base_names] + [invariant]
    problems = G.verify_invariants(vertical_bundle, invariants, chart, seed)
    if problems:
        raise DmzError("invariant verification failed: " + "; ".join(problems))

    p_i = [h.apply(invariant) for h in horizontals]
    for idx, pi in enumerate(p_i):
        for v in verticals:
            img = v.apply(pi)
            nz, _ = G._is_nonzero(img, seed)
            if nz:
                raise DmzError(
                    f"first derivative {idx + 1} of the invariant is not vertical-invariant")

    gradient_names = [f"{dep}{i}" for i in range(1, n + 1)]
    subst = dict(inverse_subst)

    def pullback(expr: Expr) -> Expr:
        out = E.substitute(expr, subst)
        leftover = set(E.variables(out)) - set(base_names) - {dep} - set(gradient_names)
        if leftover:
            raise DmzError(
                f"inverse substitution left chart coordinates {sorted(leftover)}")
        return out

    back_u = pullback(invariant)
    if not (back_u == E.var(dep)):
        raise DmzError("inverse substitution does not send the invariant to the dependent name")
    for idx, pi in enumerate(p_i):
        target = E.var(gradient_names[idx])
        if not (pullback(pi) == target):
            raise DmzError(
                f"inverse substitution does not send derivative {idx + 1} to {gradient_names[idx]}")

    f_entries = {}
    report = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            fij = pullback(horizontals[j - 1].apply(p_i[i - 1]))
            fji = pullback(horizontals[i - 1].apply(p_i[j - 1]))
            difference = fij - fji
            if not difference.is_zero_form():
                raise DmzError(
                    f"mixed derivatives disagree for pair ({i}, {j}): {E.render(difference)}")
            f_entries[(i, j)] = fij
    out = GdmzSystem(base_names, dep=dep, f=f_entries)
    obstructions = gdmz_formal_obstructions(out)
    if obstructions:
        raise DmzError(f"compatibility residuals keep formal symbols {obstructions}")
    for res in gdmz_compatibility_residuals(out):
        if E.is_rational_function(res.value):
            okv = res.value.is_zero_form()
        else:
            okv = E.is_zero(res.value, seed=seed).zero
        if not okv:
            raise DmzError(
                f"constructed system is not compatible at {res.indices}: {E.render(res.value)}")
    report.append(f"constructed {len(f_entries)} right-hand sides on base {base_names}")
    return ConstructionResult(gdmz=out, invariant_derivatives=p_i,
                              vertical_bundle=vertical_bundle, report=report)


def _identify_base(chart: G.Chart, parts, invariant: Expr,
                   seed: int = 0) -> dict[int, int]:
    """Find the n base coordinates: coordinate c is a base candidate for
    part p when exactly one field of part p has coefficient 1 on c and
    every other field of every part has coefficient 0 there.  Both
    members of a pair can qualify (a vertical field may itself be a unit
    coordinate field), so ties are broken by the invariant: the partner
    of the true base owner is vertical and must annihilate it."""
    n = len(parts)
    all_fields = [f for pair in parts for f in pair]
    per_part = []
    for p, pair in enumerate(parts):
        candidates = []
        for ci, name in enumerate(chart.names):
            col = [f.components[ci] for f in all_fields]
            ones = [fi for fi, c in enumerate(col) if c == E.number(1)]
            zeros = [fi for fi, c in enumerate(col) if c.is_zero_form()]
            if len(ones) == 1 and len(zeros) == len(all_fields) - 1:
                owner = ones[0] // 2
                if owner == p and all_fields[ones[0]] in pair:
                    candidates.append((ci, ones[0]))
        if not candidates:
            raise DmzError(
                f"cannot identify a base coordinate for part {p + 1}")
        per_part.append(candidates)

    survivors = []
    for combo in product(*per_part):
        if len({ci for ci, _ in combo}) != n:
            continue
        for p, (ci, owner) in enumerate(combo):
            partner = all_fields[2 * p + 1 - owner % 2]
            img = partner.apply(invariant)
            if not img.is_zero_form() and not zero_verdict(img, seed=seed).zero:
                break
        else:
            survivors.append({p: ci for p, (ci, _) in enumerate(combo)})
    if not survivors:
        raise DmzError(
            "no assignment of base coordinates leaves the invariant "
            "vertically constant")
    if len(survivors) > 1:
        raise DmzError(
            "adapted structure is ambiguous: several base-coordinate "
            "assignments are consistent with the invariant")
    return survivors[0]
