"""Jet-space contact structure, prolongation, and chart transport.

A JetProduct models a product of one-dependent-variable jet spaces.  Each
factor contributes a base coordinate and order+1 derivative coordinates
named <dep>0 .. <dep>k, so a factor of order 2 with base "z" and
dependent prefix "z" carries the chart (z, z0, z1, z2).  The contact
pair of that factor is

    X = d/dz + z1 d/dz0 + z2 d/dz1,      V = d/dz2,

and the contact distribution of the product is the direct sum of the
factor pairs.  Vertical group generators are prolonged factor-by-factor
with truncated total derivatives; transported distributions are checked
against their defining identity rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

from dmzkit import expr as E
from dmzkit import geometry as G
from dmzkit.expr import Expr


class JetsError(ValueError):
    pass


@dataclass(frozen=True)
class JetFactor:
    order: int
    base: str
    dep: str

    def __post_init__(self):
        if self.order < 1:
            raise JetsError("factor order must be at least 1")

    def names(self) -> tuple[str, ...]:
        return (self.base,) + tuple(f"{self.dep}{m}" for m in range(self.order + 1))


class JetProduct:
    def __init__(self, factors):
        self.factors = tuple(factors)
        names = []
        for f in self.factors:
            for nm in f.names():
                if nm in names:
                    raise JetsError(f"coordinate name {nm!r} repeats across factors")
                names.append(nm)
        self.chart = G.Chart(tuple(names))

    @property
    def dim(self) -> int:
        return self.chart.dim


def total_derivative_field(J: JetProduct, index: int) -> G.VectorField:
    """Truncated total derivative of factor ``index`` (0-based)."""
    f = J.factors[index]
    comps = {f.base: E.number(1)}
    for m in range(f.order):
        comps[f"{f.dep}{m}"] = E.var(f"{f.dep}{m + 1}")
    return G.VectorField.from_dict(J.chart, comps)


def contact_basis(J: JetProduct) -> list[G.Distribution]:
    """One rank-2 distribution per factor: the truncated total derivative
    paired with the highest-derivative vertical field."""
    out = []
    for idx, f in enumerate(J.factors):
        X = total_derivative_field(J, idx)
        V = G.VectorField.from_dict(J.chart, {f"{f.dep}{f.order}": E.number(1)})
        out.append(G.Distribution(J.chart, [X, V]))
    return out


def prolong(J: JetProduct, X: G.VectorField, seed: int = 0) -> G.VectorField:
    """Prolong a point generator to the full jet chart.

    X may only have coefficients on base coordinates (each depending on
    its own base alone, so independent variables map to themselves) and
    on zeroth-derivative coordinates (each depending on its factor's base
    and zeroth coordinate).  The prolonged coefficients follow the usual
    recursion  phi_{m+1} = D(phi_m) - x_{m+1} D(xi)  with the factor's
    truncated total derivative D.  The result is checked to be an
    infinitesimal symmetry of the contact distribution; a bracket that
    escapes is reported and rejected.
    """
    if X.chart != J.chart:
        raise JetsError("generator must live on the jet chart")
    allowed = set()
    for f in J.factors:
        allowed.add(f.base)
        allowed.add(f"{f.dep}0")
    for name, comp in zip(J.chart.names, X.components):
        if name not in allowed and not comp.is_zero_form():
            raise JetsError(f"generator has a coefficient on jet coordinate {name}")

    comps: dict[str, Expr] = {}
    for idx, f in enumerate(J.factors):
        xi = X.components[J.chart.index(f.base)]
        phi = X.components[J.chart.index(f"{f.dep}0")]
        if set(E.variables(xi)) - {f.base}:
            raise JetsError(
                f"base coefficient on {f.base} must depend on {f.base} alone")
        if set(E.variables(phi)) - {f.base, f"{f.dep}0"}:
            raise JetsError(
                f"coefficient on {f.dep}0 must depend only on ({f.base}, {f.dep}0)")
        if not xi.is_zero_form():
            comps[f.base] = xi
        D = total_derivative_field(J, idx)
        dxi = D.apply(xi)
        level = phi
        if not level.is_zero_form():
            comps[f"{f.dep}0"] = level
        for m in range(f.order):
            level = D.apply(level) - E.var(f"{f.dep}{m + 1}") * dxi
            if not level.is_zero_form():
                comps[f"{f.dep}{m + 1}"] = level
    out = G.VectorField.from_dict(J.chart, comps)

    contact_fields = [fld for pair in contact_basis(J) for fld in pair.fields]
    full = G.Distribution(J.chart, contact_fields)
    for fld in contact_fields:
        br = G.lie_bracket(out, fld)
        if not br.is_zero_form() and not full.contains(br, seed):
            raise JetsError(
                "prolonged field is not a contact symmetry: bracket with "
                f"{fld!r} escapes the contact distribution")
    return out


@dataclass
class SymbolicMap:
    """Coordinate map given by one source-variable expression per target
    coordinate, with an optional inverse (one target-variable expression
    per source coordinate)."""

    source: G.Chart
    target: G.Chart
    components: tuple
    inverse: tuple | None = None

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.target.dim:
            raise JetsError("need one component per target coordinate")
        if self.inverse is not None:
            self.inverse = tuple(self.inverse)
            if len(self.inverse) != self.source.dim:
                raise JetsError("inverse needs one component per source coordinate")

    def forward_map(self) -> dict[str, Expr]:
        return dict(zip(self.target.names, self.components))

    def inverse_map(self) -> dict[str, Expr]:
        if self.inverse is None:
            raise JetsError("map carries no inverse")
        return dict(zip(self.source.names, self.inverse))

    def verify_inverse(self, seed: int = 0) -> None:
        """Both composites must reduce to the identity coordinate lists."""
        fwd = self.forward_map()
        inv = self.inverse_map()
        for name, comp in zip(self.source.names, self.inverse):
            back = E.substitute(comp, fwd)
            if not _is_identity(back, name, seed):
                raise JetsError(
                    f"inverse fails on source coordinate {name}: got {E.render(back)}")
        for name, comp in zip(self.target.names, self.components):
            back = E.substitute(comp, inv)
            if not _is_identity(back, name, seed):
                raise JetsError(
                    f"inverse fails on target coordinate {name}: got {E.render(back)}")


def _is_identity(e: Expr, name: str, seed: int) -> bool:
    resid = e - E.var(name)
    if resid.is_zero_form():
        return True
    return bool(E.is_zero(resid, seed=seed).zero)


def identity_map(chart: G.Chart) -> SymbolicMap:
    comps = tuple(E.var(nm) for nm in chart.names)
    return SymbolicMap(chart, chart, comps, comps)


def pushforward(phi: SymbolicMap, D: G.Distribution, seed: int = 0) -> G.Distribution:
    """Transport D along phi using the supplied inverse.

    Each spanning field X maps to the field with target components
    X(phi_j) rewritten through the inverse; the defining identity
    Y_j o phi = X(phi_j) is re-checked per component afterwards, which
    catches a wrong inverse even when verify_inverse was skipped upstream.
    """
    phi.verify_inverse(seed)
    fwd = phi.forward_map()
    inv = phi.inverse_map()
    pushed = []
    for X in D.fields:
        comps = {}
        for j, name in enumerate(phi.target.names):
            upstairs = X.apply(phi.components[j])
            downstairs = E.substitute(upstairs, inv)
            resid = E.substitute(downstairs, fwd) - upstairs
            if not resid.is_zero_form() and not E.is_zero(resid, seed=seed).zero:
                raise JetsError(
                    f"pushforward identity fails on component {name}: "
                    f"{E.render(resid)}")
            if not downstairs.is_zero_form():
                comps[name] = downstairs
        pushed.append(G.VectorField.from_dict(phi.target, comps))
    return G.Distribution(phi.target, pushed)


@dataclass
class QuotientAssembly:
    chart: G.Chart
    parts: list
    fields: list

    @property
    def distribution(self) -> G.Distribution:
        return G.Distribution(self.chart, self.fields)


def assemble_quotient_H(pieces, renaming: dict[str, str],
                        chart_names=None) -> QuotientAssembly:
    """Merge transported contact pairs into one split distribution.

    ``pieces`` are rank-2 distributions (possibly on different charts);
    ``renaming`` sends each piece's group coordinates into the shared
    block, identifying coordinates that carry the same new name.  Piece
    coordinates without an entry keep their names and must not collide
    except by coming from the same chart.  The merged chart is the
    first-seen order of renamed coordinates unless ``chart_names`` fixes
    it explicitly.  The result keeps the pair structure for the
    hyperbolicity checks downstream.
    """
    merged: list[str] = []
    for piece in pieces:
        for nm in piece.chart.names:
            new = renaming.get(nm, nm)
            if new not in merged:
                merged.append(new)
    if chart_names is not None:
        chart_names = list(chart_names)
        if sorted(chart_names) != sorted(merged):
            raise JetsError(
                f"chart_names {chart_names} do not match the merged coordinates {merged}")
        merged = chart_names
    chart = G.Chart(tuple(merged))
    rename_exprs = {old: E.var(new) for old, new in renaming.items()}

    parts = []
    fields = []
    for piece in pieces:
        part = []
        for X in piece.fields:
            comps: dict[str, Expr] = {}
            for nm, val in zip(piece.chart.names, X.components):
                if val.is_zero_form():
                    continue
                val = E.substitute(val, rename_exprs)
                extra = set(E.variables(val)) - set(merged)
                if extra:
                    raise JetsError(
                        f"coefficient on {nm} uses coordinates {sorted(extra)} "
                        "outside the merged chart")
                new = renaming.get(nm, nm)
                if new in comps:
                    raise JetsError(
                        f"two coordinates of one chart merge into {new}")
                comps[new] = val
            part.append(G.VectorField.from_dict(chart, comps))
        parts.append(part)
        fields.extend(part)
    n = len(pieces)
    if chart.dim != 3 * n + 1:
        raise JetsError(
            f"merged chart has dimension {chart.dim}, expected {3 * n + 1} "
            f"for {n} parts")
    return QuotientAssembly(chart=chart, parts=parts, fields=fields)
