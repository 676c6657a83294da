"""Charts, vector fields, distributions, and their bracket invariants.

Everything is exact: ranks are computed by Gaussian elimination over the
field of rational functions with pivots validated through the kernel's
zero test, so a rank statement comes with a record of whether it relied
on sampling and near which locus it may degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from dmzkit import expr as E
from dmzkit.expr import Expr


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise GeometryError("duplicate coordinate names")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GeometryError(f"{name!r} is not a coordinate of this chart") from None


class VectorField:
    """First-order derivation with one component per chart coordinate."""

    def __init__(self, chart: Chart, components):
        comps = tuple(c if isinstance(c, Expr) else E.number(c) for c in components)
        if len(comps) != chart.dim:
            raise GeometryError("component count does not match the chart dimension")
        self.chart = chart
        self.components = comps

    @classmethod
    def from_dict(cls, chart: Chart, entries: dict[str, Expr]) -> "VectorField":
        comps = [E.number(0)] * chart.dim
        for name, val in entries.items():
            comps[chart.index(name)] = val
        return cls(chart, comps)

    def apply(self, f: Expr) -> Expr:
        out = E.number(0)
        for name, comp in zip(self.chart.names, self.components):
            if not comp.is_zero_form():
                out = out + comp * E.diff(f, name)
        return out

    def __add__(self, other: "VectorField") -> "VectorField":
        self._same_chart(other)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._same_chart(other)
        return VectorField(self.chart, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, [-a for a in self.components])

    def scale(self, factor: Expr) -> "VectorField":
        return VectorField(self.chart, [factor * a for a in self.components])

    def is_zero_form(self) -> bool:
        return all(c.is_zero_form() for c in self.components)

    def _same_chart(self, other):
        if self.chart.names != other.chart.names:
            raise GeometryError("vector fields live on different charts")

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return (self.chart.names == other.chart.names
                and all(a == b for a, b in zip(self.components, other.components)))

    def __hash__(self):
        return hash((self.chart.names,
                     tuple(E.render(c) for c in self.components)))

    def __repr__(self):
        parts = []
        for name, comp in zip(self.chart.names, self.components):
            if not comp.is_zero_form():
                parts.append(f"({E.render(comp)})*d/d{name}")
        return " + ".join(parts) if parts else "0"


def lie_bracket(a: VectorField, b: VectorField) -> VectorField:
    a._same_chart(b)
    chart = a.chart
    comps = []
    for k, name_k in enumerate(chart.names):
        total = E.number(0)
        for name_i, ai, bi in zip(chart.names, a.components, b.components):
            if not ai.is_zero_form():
                total = total + ai * E.diff(b.components[chart.index(name_k)], name_i)
            if not bi.is_zero_form():
                total = total - bi * E.diff(a.components[chart.index(name_k)], name_i)
        comps.append(total)
    return VectorField(chart, comps)


# ---------------------------------------------------------------------------
# exact linear algebra over the function field


@dataclass
class RankReport:
    rank: int
    certified: bool
    degenerate_locus: list[str] = field(default_factory=list)


def _is_nonzero(e: Expr, seed: int) -> tuple[bool, bool]:
    """(nonzero?, certified?) for a matrix entry."""
    if e.is_zero_form():
        return False, True
    if E.is_rational_function(e):
        return True, True
    v = E.is_zero(e, seed=seed)
    return (not v.zero), v.proved


def _echelon(rows: list[list[Expr]], seed: int = 0):
    """Gaussian elimination over the function field.

    Returns (pivot list [(row, col, pivot Expr)], reduced rows, certified).
    Division by a pivot is exact; pivot nonvanishing is checked with the
    kernel zero test, so `certified` is False when any pivot decision
    relied on sampling.
    """
    rows = [list(r) for r in rows]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots = []
    certified = True
    r = 0
    for col in range(ncols):
        if r >= nrows:
            break
        best = None
        for i in range(r, nrows):
            nz, sure = _is_nonzero(rows[i][col], seed)
            if nz:
                weight = len(E.render(rows[i][col]))
                if best is None or weight < best[1]:
                    best = (i, weight, sure)
        if best is None:
            continue
        i, _, sure = best
        certified = certified and sure
        rows[r], rows[i] = rows[i], rows[r]
        piv = rows[r][col]
        pivots.append((r, col, piv))
        for i2 in range(nrows):
            if i2 == r:
                continue
            factor = rows[i2][col]
            if factor.is_zero_form():
                continue
            ratio = factor / piv
            rows[i2] = [a - ratio * b for a, b in zip(rows[i2], rows[r])]
        r += 1
    return pivots, rows, certified


def _matrix_rank(rows: list[list[Expr]], seed: int = 0) -> RankReport:
    if not rows:
        return RankReport(rank=0, certified=True)
    pivots, _, certified = _echelon(rows, seed)
    locus = []
    for _, _, piv in pivots:
        if E.variables(piv):
            locus.append(E.render(piv))
    return RankReport(rank=len(pivots), certified=certified, degenerate_locus=sorted(set(locus)))


class Distribution:
    """Span of finitely many vector fields on a chart."""

    def __init__(self, chart: Chart, fields):
        self.chart = chart
        self.fields = tuple(fields)
        for f in self.fields:
            if f.chart.names != chart.names:
                raise GeometryError("field chart mismatch")
        self._rank_report = None

    def matrix(self) -> list[list[Expr]]:
        return [list(f.components) for f in self.fields]

    def rank_report(self, seed: int = 0) -> RankReport:
        if self._rank_report is None:
            self._rank_report = _matrix_rank(self.matrix(), seed)
        return self._rank_report

    @property
    def rank(self) -> int:
        return self.rank_report().rank

    def contains(self, f: VectorField, seed: int = 0) -> bool:
        extended = _matrix_rank(self.matrix() + [list(f.components)], seed)
        return extended.rank == self.rank

    def with_fields(self, extra) -> "Distribution":
        return Distribution(self.chart, list(self.fields) + list(extra))


def _respan(D: Distribution, seed: int = 0) -> Distribution:
    """Replace the spanning set by denominator-cleared echelon rows."""
    pivots, reduced, _ = _echelon(D.matrix(), seed)
    fields = []
    for ri, _, _ in pivots:
        row = reduced[ri]
        common = E.number(1)
        for entry in row:
            den = E.denominator(entry)
            if not (den == E.number(1)):
                common = common * den
        fields.append(VectorField(D.chart, [entry * common for entry in row]))
    return Distribution(D.chart, fields)


def derived_flag(D: Distribution, seed: int = 0) -> list[Distribution]:
    """D, D + [D,D], ... until the rank stops growing."""
    flag = [D]
    current = D
    while True:
        fields = list(current.fields)
        brackets = []
        for i in range(len(fields)):
            for j in range(i + 1, len(fields)):
                br = lie_bracket(fields[i], fields[j])
                if not br.is_zero_form():
                    brackets.append(br)
        nxt = current.with_fields(brackets)
        if nxt.rank == current.rank:
            return flag
        if len(nxt.fields) > 3 * D.chart.dim:
            nxt = _respan(nxt, seed)
        flag.append(nxt)
        current = nxt
        if current.rank >= D.chart.dim:
            return flag


def cauchy_characteristic(D: Distribution, seed: int = 0) -> Distribution:
    """Fields in D whose bracket with every field of D stays in D.

    Solved exactly as a linear system over the function field; the result
    is verified to be contained in D and closed under brackets.
    """
    fields = list(D.fields)
    r = len(fields)
    if r == 0:
        return Distribution(D.chart, [])
    pivots, reduced, _ = _echelon(D.matrix(), seed)
    pivot_cols = [c for _, c, _ in pivots]
    base_rank = len(pivots)
    if base_rank == D.chart.dim:
        return Distribution(D.chart, fields)

    # solve the pivot-column coefficients so a row reduces to zero on the
    # pivot columns, then demand the remainder vanish entirely
    basis_rows = [reduced[i] for i in range(base_rank)]

    def reduce_mod(row: list[Expr]) -> list[Expr]:
        out = list(row)
        for (br, bc, piv), brow in zip(pivots, basis_rows):
            coeff = out[bc]
            if coeff.is_zero_form():
                continue
            ratio = coeff / piv
            out = [a - ratio * b for a, b in zip(out, brow)]
        return out

    constraint_rows = []  # linear conditions on a_1..a_r
    for j in range(r):
        reduced_brs = []
        for i in range(r):
            br = lie_bracket(fields[i], fields[j])
            reduced_brs.append(reduce_mod(list(br.components)))
        for col in range(D.chart.dim):
            if col in pivot_cols:
                continue
            rowvec = [reduced_brs[i][col] for i in range(r)]
            if any(not x.is_zero_form() for x in rowvec):
                constraint_rows.append(rowvec)

    if not constraint_rows:
        kernel = [[E.number(1) if i == k else E.number(0) for i in range(r)] for k in range(r)]
    else:
        kernel = _kernel_basis(constraint_rows, seed)

    out_fields = []
    for vec in kernel:
        common = E.number(1)
        for a in vec:
            den = E.denominator(a)
            if not (den == E.number(1)):
                common = common * den
        total = None
        for a, f in zip(vec, fields):
            if a.is_zero_form():
                continue
            piece = f.scale(a * common)
            total = piece if total is None else total + piece
        if total is not None and not total.is_zero_form():
            out_fields.append(total)
    result = Distribution(D.chart, out_fields)

    for f in result.fields:
        if not D.contains(f, seed):
            raise GeometryError("characteristic computation left the distribution")
    for i in range(len(result.fields)):
        for j in range(i + 1, len(result.fields)):
            br = lie_bracket(result.fields[i], result.fields[j])
            if not result.contains(br, seed) and not br.is_zero_form():
                raise GeometryError("characteristic distribution is not integrable")
    return result


def _kernel_basis(rows: list[list[Expr]], seed: int = 0) -> list[list[Expr]]:
    """Basis of the right kernel of a matrix with function entries."""
    ncols = len(rows[0])
    pivots, reduced, _ = _echelon(rows, seed)
    pivot_cols = {c: (ri, piv) for ri, c, piv in pivots}
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for fc in free_cols:
        vec = [E.number(0)] * ncols
        vec[fc] = E.number(1)
        for c, (ri, piv) in pivot_cols.items():
            vec[c] = -reduced[ri][fc] / piv
        basis.append(vec)
    return basis


def derived_type(D: Distribution) -> list[list[int]]:
    """[[rank, rank of the Cauchy characteristic]] along the derived flag.

    When the flag terminates at the whole tangent bundle the last entry is
    [dim, dim].
    """
    out = []
    for step in derived_flag(D):
        ch = cauchy_characteristic(step)
        out.append([step.rank, ch.rank])
    return out


# ---------------------------------------------------------------------------
# hyperbolic structures


@dataclass
class HyperbolicReport:
    ok: bool
    n: int
    messages: list[str] = field(default_factory=list)
    derived: list[list[int]] | None = None

    def __bool__(self):
        return self.ok


def check_n_hyperbolic(chart: Chart, parts: list[tuple[VectorField, VectorField]],
                       seed: int = 0) -> HyperbolicReport:
    """Verify the rank, bracket, and derived-type shape of a split
    rank-2n distribution on a (3n+1)-chart."""
    n = len(parts)
    messages = []
    ok = True
    if chart.dim != 3 * n + 1:
        ok = False
        messages.append(f"chart dimension {chart.dim} != {3 * n + 1}")
    all_fields = [f for pair in parts for f in pair]
    H = Distribution(chart, all_fields)
    for idx, pair in enumerate(parts, start=1):
        rr = _matrix_rank([list(pair[0].components), list(pair[1].components)], seed)
        if rr.rank != 2:
            ok = False
            messages.append(f"part {idx} does not have rank 2")
    if H.rank != 2 * n:
        ok = False
        messages.append(f"H has rank {H.rank}, expected {2 * n}")
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for a in parts[i]:
                for b in parts[j]:
                    br = lie_bracket(a, b)
                    if not br.is_zero_form() and not H.contains(br, seed):
                        ok = False
                        messages.append(
                            f"[H_{i + 1}, H_{j + 1}] leaves H")
    z_fields = [lie_bracket(pair[0], pair[1]) for pair in parts]
    for idx, z in enumerate(z_fields, start=1):
        if _matrix_rank(H.matrix() + [list(z.components)], seed).rank != 2 * n + 1:
            ok = False
            messages.append(f"characteristic direction {idx} is not independent of H")
    if _matrix_rank(H.matrix() + [list(z.components) for z in z_fields], seed).rank != 3 * n:
        ok = False
        messages.append("the n characteristic directions are not jointly independent mod H")
    dtype = derived_type(H)
    expected = [[2 * n, 0], [3 * n, n], [3 * n + 1, 3 * n + 1]]
    if dtype != expected:
        ok = False
        messages.append(f"derived type {dtype} != {expected}")
    return HyperbolicReport(ok=ok, n=n, messages=messages, derived=dtype)


def verify_invariants(fields, funcs: list[Expr], chart: Chart,
                      seed: int = 0) -> list[str]:
    """Check that each function is annihilated by each field, that the
    count matches dim - rank, and that the functions are independent.
    Returns a list of violation messages (empty means verified)."""
    problems = []
    D = Distribution(chart, list(fields))
    for fi, func in enumerate(funcs):
        for xi, f in enumerate(fields):
            image = f.apply(func)
            nonzero, _ = _is_nonzero(image, seed)
            if nonzero:
                problems.append(
                    f"field {xi + 1} does not annihilate invariant {fi + 1}: {E.render(image)}")
    expected = chart.dim - D.rank
    if len(funcs) != expected:
        problems.append(f"invariant count {len(funcs)} != dim - rank = {expected}")
    jac = [[E.diff(func, name) for name in chart.names] for func in funcs]
    rr = _matrix_rank(jac, seed)
    if rr.rank != len(funcs):
        problems.append("invariants are functionally dependent")
    return problems
