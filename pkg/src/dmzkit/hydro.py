"""Diagonal hydrodynamic systems rich in conservation laws.

A HydroSystem is a diagonal quasilinear system u^i_t = v^i(u) u^i_x with
pairwise distinct characteristic speeds.  The off-diagonal connection

    G[i, j] = (dv^i/du^j) / (v^j - v^i),    i != j,

drives everything: the richness test compares its cross derivatives,
commuting flows solve dw^i/du^j = G[i, j] (w^j - w^i), conserved
densities solve the associated second-order linear system, and exact
solutions come from inverting w^i(u) = v^i(u) t + x pointwise (the
generalized hodograph method).  The connection of such a linear system
equals the connection extracted here with both families of integrability
residuals vanishing, and the module exposes that translation in both
directions.

All numeric work runs in exact rational arithmetic; floats only appear
in the finite-difference diagnostics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from dmzkit import expr as E
from dmzkit.dmz import DmzError, DmzSystem, Residual, is_involutive, zero_verdict
from dmzkit.expr import Expr


class HydroError(ValueError):
    pass


class DegeneracyWarning(UserWarning):
    """Characteristic speeds coincide somewhere on the chart."""


def _as_components(coords, values, what):
    vals = tuple(values)
    if len(vals) != len(coords):
        raise HydroError(f"need one {what} per coordinate")
    for v in vals:
        bad = set(E.variables(v)) - set(coords)
        if bad:
            raise HydroError(f"{what} uses unknown coordinates {sorted(bad)}")
    return vals


@dataclass(frozen=True)
class HydroSystem:
    coords: tuple
    velocities: tuple

    def __init__(self, coords, velocities):
        object.__setattr__(self, "coords", tuple(coords))
        object.__setattr__(self, "velocities",
                           _as_components(self.coords, velocities, "velocity"))

    @property
    def n(self) -> int:
        return len(self.coords)

    def velocity(self, i: int) -> Expr:
        return self.velocities[i - 1]


@dataclass(frozen=True)
class FlowField:
    coords: tuple
    components: tuple

    def __init__(self, coords, components):
        object.__setattr__(self, "coords", tuple(coords))
        object.__setattr__(self, "components",
                           _as_components(self.coords, components, "flow component"))

    @property
    def n(self) -> int:
        return len(self.coords)

    def component(self, i: int) -> Expr:
        return self.components[i - 1]


def check_strong_hyperbolicity(V: HydroSystem, seed: int = 0) -> list[str]:
    """Raise if two speeds agree identically; list coincidence loci."""
    messages = []
    for i in range(1, V.n + 1):
        for j in range(i + 1, V.n + 1):
            d = V.velocity(i) - V.velocity(j)
            if zero_verdict(d, seed=seed).zero:
                raise HydroError(
                    f"speeds v{i} and v{j} agree identically; "
                    "the system is not strongly hyperbolic")
            num = E.numerator(d)
            if E.variables(num) or E.opaque_names(num):
                messages.append(
                    f"speeds v{i} and v{j} coincide on the locus "
                    f"{E.render(num)} = 0")
    return messages


def _connection_entries(V: HydroSystem) -> dict:
    entries = {}
    for i in range(1, V.n + 1):
        for j in range(1, V.n + 1):
            if i == j:
                continue
            dv = E.diff(V.velocity(i), V.coords[j - 1])
            entries[(i, j)] = dv / (V.velocity(j) - V.velocity(i))
    return entries


def diagonal_connection(V: HydroSystem, seed: int = 0) -> dict:
    """Connection map (i, j) -> G[i, j]; warns at degeneracy loci."""
    for msg in check_strong_hyperbolicity(V, seed):
        warnings.warn(msg, DegeneracyWarning, stacklevel=2)
    return _connection_entries(V)


def connection_from_dmz(S: DmzSystem) -> dict:
    """Read the connection off a linear system with vanishing zeroth
    order term: G[i, j] is the coefficient of the u_{x_i} derivative in
    the (i, j) equation."""
    for i, j in S.pairs():
        if not S.c2(i, j).is_zero_form():
            raise HydroError(
                f"zeroth-order coefficient at ({i}, {j}) must vanish")
    entries = {}
    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            if i != j:
                entries[(i, j)] = S.gamma2(j, i)
    return entries


def _resolve_connection(source) -> tuple[dict, tuple]:
    if isinstance(source, HydroSystem):
        return _connection_entries(source), source.coords
    if isinstance(source, DmzSystem):
        return connection_from_dmz(source), source.coords
    raise HydroError("expected a HydroSystem or a DmzSystem")


def semihamiltonian_residuals(V: HydroSystem) -> list[Residual]:
    """Cross-derivative symmetry of the connection, all distinct triples."""
    conn = _connection_entries(V)
    out = []
    n = V.n
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                if len({i, j, k}) != 3:
                    continue
                value = (E.diff(conn[(i, j)], V.coords[k - 1])
                         - E.diff(conn[(i, k)], V.coords[j - 1]))
                out.append(Residual("semihamiltonian", (i, j, k), value))
    return out


def is_semihamiltonian(V: HydroSystem, seed: int = 0, samples: int = 32,
                       precision: int = 256) -> bool:
    check_strong_hyperbolicity(V, seed)
    return all(zero_verdict(r.value, seed=seed, samples=samples,
                            precision=precision).zero
               for r in semihamiltonian_residuals(V))


def commuting_flow_residuals(source, W) -> list[Residual]:
    """Defect of W as a commuting flow for the connection of ``source``
    (a HydroSystem or a C = 0 DmzSystem)."""
    conn, coords = _resolve_connection(source)
    if isinstance(W, HydroSystem):
        W = FlowField(W.coords, W.velocities)
    if W.coords != coords:
        raise HydroError("flow and system use different coordinates")
    out = []
    n = len(coords)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            value = (E.diff(W.component(i), coords[j - 1])
                     - conn[(i, j)] * (W.component(j) - W.component(i)))
            out.append(Residual("commuting_flow", (i, j), value))
    return out


def conserved_density_residuals(source, P: Expr) -> list[Residual]:
    """Defect of P as a conserved density: the mixed second derivative
    must match the connection contraction of the gradient."""
    conn, coords = _resolve_connection(source)
    bad = set(E.variables(P)) - set(coords)
    if bad:
        raise HydroError(f"density uses unknown coordinates {sorted(bad)}")
    out = []
    n = len(coords)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            value = (E.diff(P, coords[i - 1], coords[j - 1])
                     - conn[(i, j)] * E.diff(P, coords[i - 1])
                     - conn[(j, i)] * E.diff(P, coords[j - 1]))
            out.append(Residual("conserved_density", (i, j), value))
    return out


def induced_dmz(V: HydroSystem, seed: int = 0) -> DmzSystem:
    """The second-order linear system whose solutions are the conserved
    densities of V; its involutivity is equivalent to richness."""
    check_strong_hyperbolicity(V, seed)
    conn = _connection_entries(V)
    S = DmzSystem(V.coords)
    for i in range(1, V.n + 1):
        for j in range(i + 1, V.n + 1):
            S.set_gamma(i, j, j, conn[(j, i)])
            S.set_gamma(i, j, i, conn[(i, j)])
    return S


def chromatography(n: int = 3, prefix: str = "u") -> HydroSystem:
    """Speeds v^i = u^i * (u^1 ... u^n); rich but not Hamiltonian for n > 2."""
    coords = [f"{prefix}{i}" for i in range(1, n + 1)]
    product = E.number(1)
    for c in coords:
        product = product * E.var(c)
    return HydroSystem(coords, [E.var(c) * product for c in coords])


def _univariate(f, fallback_param: str):
    """Normalize boundary data to a (parameter, body) pair."""
    if isinstance(f, tuple):
        param, body = f
        return param, body
    names = E.variables(f)
    if len(names) > 1:
        raise HydroError(f"boundary function {E.render(f)} is not univariate")
    return (names[0] if names else fallback_param), f


def three_component_semi(coords=("u1", "u2", "u3"), fs=None, base=None) -> FlowField:
    """The closed-form three-component commuting-flow family.

    With base functions (h, k, g) of the three coordinates (defaulting
    to the coordinates themselves) and boundary data f_1, f_2, f_3:

        w^1 = ((k - h) f_1'(h) + f_1(h) - f_2(k) + f_3(g)) / (g - k)
        w^2 = ((k - h) f_2'(k) + f_1(h) - f_2(k) + f_3(g)) / (g - h)
        w^3 = f_3'(g)

    fs = None keeps the f_i as opaque function symbols, which requires
    the base to be bare coordinates.
    """
    coords = tuple(coords)
    if len(coords) != 3:
        raise HydroError("the closed-form family is three-component")
    if base is None:
        base = tuple(E.var(c) for c in coords)
    base = tuple(base)
    if len(base) != 3:
        raise HydroError("need three base functions")

    if fs is None:
        for b, c in zip(base, coords):
            if b != E.var(c):
                raise HydroError(
                    "opaque boundary data needs bare-coordinate base "
                    "functions; supply concrete fs instead")
        f = [E.opaque(f"f{i}", coords[i - 1], 0) for i in (1, 2, 3)]
        fp = [E.opaque(f"f{i}", coords[i - 1], 1) for i in (1, 2, 3)]
    else:
        if len(fs) != 3:
            raise HydroError("need three boundary functions")
        f, fp = [], []
        for idx, spec in enumerate(fs):
            param, body = _univariate(spec, f"_s{idx}")
            f.append(E.substitute(body, {param: base[idx]}))
            fp.append(E.substitute(E.diff(body, param), {param: base[idx]}))

    h, k, g = base
    common = f[0] - f[1] + f[2]
    w1 = ((k - h) * fp[0] + common) / (g - k)
    w2 = ((k - h) * fp[1] + common) / (g - h)
    w3 = fp[2]
    return FlowField(coords, (w1, w2, w3))


def _three_wave_template(coords, base) -> dict:
    """Two-index coefficient pattern shared by the registered closed-form
    linear systems (bare-coordinate base, or one unary function per
    coordinate)."""
    h, k, g = base
    hp, kp, gp = [E.diff(b, c) for b, c in zip(base, coords)]
    return {
        (2, 1): (g - h) * kp / ((g - k) * (h - k)),
        (1, 2): -(g - k) * hp / ((g - h) * (h - k)),
        (3, 1): gp / (g - k),
        (1, 3): E.number(0),
        (3, 2): gp / (g - h),
        (2, 3): E.number(0),
    }


def _recognize_family(S: DmzSystem):
    """Try the registered coefficient patterns; return base functions."""
    if S.off_index_entries():
        return None
    coords = S.coords
    candidates = [tuple(E.var(c) for c in coords)]
    opaques = set()
    for i, j in S.pairs():
        opaques |= E.opaque_names(S.gamma2(i, j))
        opaques |= E.opaque_names(S.gamma2(j, i))
    if len(opaques) == 3:
        for perm in permutations(sorted(opaques)):
            candidates.append(tuple(
                E.opaque(nm, c, 0) for nm, c in zip(perm, coords)))
    for base in candidates:
        template = _three_wave_template(coords, base)
        if all(S.gamma2(i, j) == val for (i, j), val in template.items()):
            return base
    return None


def hydro_from_dmz(S: DmzSystem, fs=None, seed: int = 0) -> HydroSystem:
    """Commuting-flow velocities for a recognized C = 0 linear system.

    Supported coefficient patterns: the concrete three-coordinate family
    (base functions equal to the coordinates) and its generalisation
    with one unknown unary function per coordinate.  The returned
    velocities are the closed-form flows with the supplied boundary
    data, re-verified against the system's own connection.
    """
    if S.n != 3:
        raise HydroError("only three-coordinate closed-form families are "
                         "registered; supply the flow field directly and "
                         "verify it with commuting_flow_residuals")
    report = is_involutive(S, seed=seed)
    if not report:
        raise HydroError("the linear system is not involutive")
    for i, j in S.pairs():
        if not S.c2(i, j).is_zero_form():
            raise HydroError("the zeroth-order coefficients must vanish")
    base = _recognize_family(S)
    if base is None:
        raise HydroError("coefficients match no registered closed-form "
                         "family; supply the flow field directly and verify "
                         "it with commuting_flow_residuals")
    if fs is None and any(base[i] != E.var(S.coords[i]) for i in range(3)):
        raise HydroError("this family needs concrete boundary functions")
    W = three_component_semi(S.coords, fs=fs, base=base)
    for r in commuting_flow_residuals(S, W):
        if not zero_verdict(r.value, seed=seed).zero:
            raise HydroError(
                f"constructed flow fails the commuting equations at "
                f"{r.indices}: {E.render(r.value)}")
    return HydroSystem(S.coords, W.components)


# ---------------------------------------------------------------------------
# Generalized hodograph solver


@dataclass(frozen=True)
class HodographResult:
    u: tuple
    residual: Fraction
    iterations: int
    pde_residual: float | None = None


def _eval_exact(e: Expr, assignment: dict) -> Fraction:
    val = E.eval_at(e, assignment)
    if not isinstance(val, Fraction):
        raise HydroError("hodograph data must be rational")
    return val


def _solve_linear(A, b):
    """Exact Gaussian elimination; raises on a singular matrix."""
    n = len(b)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            raise HydroError("singular Jacobian in Newton step")
        M[col], M[pivot] = M[pivot], M[col]
        inv = Fraction(1) / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [x - factor * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _newton(coords, funcs, jac, guess, tol, max_iter):
    u = [Fraction(g) for g in guess]
    point = dict(zip(coords, u))
    resid = [_eval_exact(f, point) for f in funcs]
    best = max(abs(r) for r in resid)
    for it in range(1, max_iter + 1):
        if best < tol:
            return tuple(u), best, it - 1
        A = [[_eval_exact(jac[i][j], point) for j in range(len(u))]
             for i in range(len(u))]
        step = _solve_linear(A, [-r for r in resid])
        scale = Fraction(1)
        for _ in range(60):
            trial = [x + scale * s for x, s in zip(u, step)]
            trial = [v.limit_denominator(2 ** 200) for v in trial]
            tp = dict(zip(coords, trial))
            try:
                tr = [_eval_exact(f, tp) for f in funcs]
                tbest = max(abs(r) for r in tr)
            except E.PoleError:
                scale /= 2
                continue
            if tbest < best:
                u, point, resid, best = trial, tp, tr, tbest
                break
            scale /= 2
        else:
            raise HydroError(
                f"Newton stalled at residual {float(best):.3e} "
                f"after {it} iterations")
    raise HydroError(
        f"Newton did not reach the tolerance in {max_iter} iterations "
        f"(residual {float(best):.3e})")


def hodograph_solve(V: HydroSystem, W, x, t, guess,
                    tol: Fraction = Fraction(1, 10 ** 12),
                    max_iter: int = 100,
                    spot_check: bool = True,
                    step: Fraction = Fraction(1, 2000)) -> HodographResult:
    """Solve w^i(u) = v^i(u) t + x by damped exact-arithmetic Newton.

    The Jacobian is differentiated symbolically and evaluated exactly;
    iterates are denominator-limited so the fractions stay bounded.
    With spot_check the solution is re-solved at four neighbouring
    (x, t) points and the diagonal quasilinear equation itself is
    checked by central differences.
    """
    if isinstance(W, HydroSystem):
        W = FlowField(W.coords, W.velocities)
    if W.coords != V.coords:
        raise HydroError("flow and system use different coordinates")
    x = Fraction(x)
    t = Fraction(t)
    funcs = [W.component(i) - V.velocity(i) * E.number(t) - E.number(x)
             for i in range(1, V.n + 1)]
    jac = [[E.diff(f, c) for c in V.coords] for f in funcs]
    u, best, iters = _newton(V.coords, funcs, jac, guess, tol, max_iter)

    pde = None
    if spot_check:
        h = Fraction(step)
        east = hodograph_solve(V, W, x + h, t, u, tol, max_iter, False)
        west = hodograph_solve(V, W, x - h, t, u, tol, max_iter, False)
        north = hodograph_solve(V, W, x, t + h, u, tol, max_iter, False)
        south = hodograph_solve(V, W, x, t - h, u, tol, max_iter, False)
        centre = dict(zip(V.coords, u))
        pde = 0.0
        for i in range(V.n):
            ux = (east.u[i] - west.u[i]) / (2 * h)
            ut = (north.u[i] - south.u[i]) / (2 * h)
            vi = _eval_exact(V.velocities[i], centre)
            pde = max(pde, abs(float(ut - vi * ux)))
    return HodographResult(u=u, residual=best, iterations=iters,
                           pde_residual=pde)


def hodograph_grid(V: HydroSystem, W, xs, ts, guess,
                   tol: Fraction = Fraction(1, 10 ** 12),
                   max_iter: int = 100) -> list[tuple]:
    """Solve over a rectangular grid with warm starts; rows are
    (x, t, HodographResult) in x-major order."""
    rows = []
    current = list(guess)
    for x in xs:
        row_start = None
        for t in ts:
            res = hodograph_solve(V, W, x, t, current, tol, max_iter,
                                  spot_check=False)
            rows.append((Fraction(x), Fraction(t), res))
            current = list(res.u)
            if row_start is None:
                row_start = current
        current = row_start
    return rows


def grid_pde_residual(V: HydroSystem, rows) -> float:
    """Finite-difference residual of u^i_t - v^i(u) u^i_x over the
    interior points of a hodograph_grid result."""
    xs = sorted({r[0] for r in rows})
    ts = sorted({r[1] for r in rows})
    table = {(r[0], r[1]): r[2].u for r in rows}
    worst = 0.0
    for xi in range(1, len(xs) - 1):
        for ti in range(1, len(ts) - 1):
            x, t = xs[xi], ts[ti]
            hx = xs[xi + 1] - xs[xi - 1]
            ht = ts[ti + 1] - ts[ti - 1]
            centre = dict(zip(V.coords, table[(x, t)]))
            for i in range(V.n):
                ux = (table[(xs[xi + 1], t)][i] - table[(xs[xi - 1], t)][i]) / hx
                ut = (table[(x, ts[ti + 1])][i] - table[(x, ts[ti - 1])][i]) / ht
                vi = _eval_exact(V.velocities[i], centre)
                worst = max(worst, abs(float(ut - vi * ux)))
    return worst
