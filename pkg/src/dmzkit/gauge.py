"""Gauge action on involutive linear systems.

The pseudogroup element attached to an exponent function lam rescales
solutions by exp(lam) and acts on the coefficients of a DmzSystem by

    Gbar_ij   = G_ij + d lam / d x_i            (two-index orientation)
    Cbar_ij   = C_ij - lam_{x_i x_j} + lam_{x_i} lam_{x_j}
                + G_ji lam_{x_i} + G_ij lam_{x_j}

so that exp(lam) * u solves the transformed system whenever u solves the
original.  Only derivatives of lam enter, so rational systems stay
rational under lam = ln(rational) and the composition law is addition of
exponents.  The zeroth-order coefficient above is symmetric in (i, j) by
construction (mixed partials of an Expr commute identically), so no
separate symmetrization step is needed.

Two specializations matter for resonant-wave theory: gauging by -ln(u)
with a solution u kills C entirely, and gauging a C = 0 system by an
exponent whose mixed Hessian matches -G_ij G_ji lands on the constraint
C = G G of the modified wave system.
"""

from __future__ import annotations

from dmzkit import expr as E
from dmzkit.dmz import DmzSystem, residual_operator_apply
from dmzkit.expr import Expr


class GaugeError(ValueError):
    pass


def _partials(S: DmzSystem, lam: Expr) -> dict[int, Expr]:
    return {i: E.diff(lam, S.coords[i - 1]) for i in range(1, S.n + 1)}


def gauge_transform(S: DmzSystem, lam: Expr) -> DmzSystem:
    """Coefficients of the transformed operator for exponent lam."""
    d = _partials(S, lam)
    out = DmzSystem(S.coords)
    for (i, j, k), val in S._gamma.items():
        if k not in (i, j):
            out.set_gamma(i, j, k, val)
    for i, j in S.pairs():
        out.set_gamma(i, j, j, S.gamma2(i, j) + d[i])
        out.set_gamma(i, j, i, S.gamma2(j, i) + d[j])
        hess = E.diff(d[i], S.coords[j - 1])
        out.set_c(i, j,
                  S.c2(i, j) - hess + d[i] * d[j]
                  + S.gamma2(j, i) * d[i] + S.gamma2(i, j) * d[j])
    return out


def gauge_invariants(S: DmzSystem) -> dict[tuple[int, int], Expr]:
    """The n(n-1) ordered-pair invariants

        inv_ij = d G_ij / d x_j - G_ij G_ji + C_ij,

    unchanged along every gauge orbit.
    """
    out = {}
    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            if i == j:
                continue
            out[(i, j)] = (E.diff(S.gamma2(i, j), S.coords[j - 1])
                           - S.gamma2(i, j) * S.gamma2(j, i) + S.c2(i, j))
    return out


def to_threewave_gauge(S: DmzSystem, u: Expr, seed: int = 0) -> DmzSystem:
    """Gauge by a nonzero solution u so the result has C = 0.

    Equivalent to gauge_transform with exponent -ln(u), but computed
    directly from u: the coefficient shifts are -u_{x_i}/u, which keeps
    everything rational and makes the sign of u irrelevant.
    """
    uz = E.is_zero(u, seed=seed)
    if uz.zero:
        raise GaugeError("gauge solution must be nonzero")
    for (i, j), resid in residual_operator_apply(S, u):
        verdict = E.is_zero(resid, seed=seed)
        if not verdict.zero:
            raise GaugeError(
                f"u does not solve the system: equation ({i},{j}) leaves "
                f"{E.render(resid)}")
    d = {i: -E.diff(u, S.coords[i - 1]) / u for i in range(1, S.n + 1)}
    out = DmzSystem(S.coords)
    for (i, j, k), val in S._gamma.items():
        if k not in (i, j):
            out.set_gamma(i, j, k, val)
    for i, j in S.pairs():
        out.set_gamma(i, j, j, S.gamma2(i, j) + d[i])
        out.set_gamma(i, j, i, S.gamma2(j, i) + d[j])
        xj = S.coords[j - 1]
        cbar = (S.c2(i, j) - E.diff(d[i], xj) + d[i] * d[j]
                + S.gamma2(j, i) * d[i] + S.gamma2(i, j) * d[j])
        if not cbar.is_zero_form() and not E.is_zero(cbar, seed=seed).zero:
            raise GaugeError(
                f"transformed zeroth-order coefficient ({i},{j}) is nonzero: "
                f"{E.render(cbar)}")
        out.set_c(i, j, E.number(0))
    return out


def to_m3wri_gauge(S: DmzSystem, mu: Expr, seed: int = 0) -> DmzSystem:
    """From a C = 0 system, gauge by exponent -mu onto the orbit point
    where C_ij = G_ij G_ji.

    mu must have mixed Hessian mu_{x_i x_j} = G_ij G_ji; the curl
    solvability conditions of that prescription are checked first so a
    failure is reported against the data rather than the candidate.
    """
    for i, j in S.pairs():
        if not E.is_zero(S.c2(i, j), seed=seed).zero:
            raise GaugeError("system must have C = 0 before this gauge step")

    def prod(a, b):
        return S.gamma2(a, b) * S.gamma2(b, a)

    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            for k in range(j + 1, S.n + 1):
                if i in (j, k):
                    continue
                curl = (E.diff(prod(i, j), S.coords[k - 1])
                        - E.diff(prod(i, k), S.coords[j - 1]))
                if not E.is_zero(curl, seed=seed).zero:
                    raise GaugeError(
                        f"Hessian prescription is not solvable: curl ({i},{j},{k}) "
                        f"leaves {E.render(curl)}")
    for i, j in S.pairs():
        resid = E.diff(mu, S.coords[i - 1], S.coords[j - 1]) - prod(i, j)
        if not E.is_zero(resid, seed=seed).zero:
            raise GaugeError(
                f"exponent fails the Hessian condition at ({i},{j}): "
                f"{E.render(resid)}")
    out = gauge_transform(S, -mu)
    for i, j in out.pairs():
        resid = out.c2(i, j) - out.gamma2(i, j) * out.gamma2(j, i)
        if not E.is_zero(resid, seed=seed).zero:
            raise GaugeError(
                f"transformed system misses the modified-wave constraint at ({i},{j})")
    return out
