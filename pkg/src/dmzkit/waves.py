"""Resonant wave-interaction systems and orthogonal-web residuals.

A WaveMatrix holds the off-diagonal interaction coefficients A_ij(x) of
an n-wave system (or the G_ij of its modified variant).  The checkers
here are the endpoints of the solution pipeline: a C = 0 involutive
linear system yields potentials, the potentials yield a wave matrix, and
the matrix must solve

    d A_jk / d x_i = A_ji A_ik                  (n-wave)
    d G_jk / d x_i = (G_ij - G_ik)(G_jk - G_ji) (modified n-wave)

together with the associated linear problems.  The potential systems
(full and half Lame) are checked in the squares s_i = h_i^2: each
residual below is the classical equation multiplied through by 2 h_i (or
2 h_i h_l), which preserves zero sets wherever the potentials are
nonzero and keeps everything rational for potentials given only by their
squares.
"""

from __future__ import annotations

from itertools import permutations

from dmzkit import expr as E
from dmzkit.dmz import (DmzError, DmzSystem, LamePotentials, Residual,
                        _dedup_canonical, residual_operator_apply)
from dmzkit.expr import Expr


class WaveMatrix:
    """Off-diagonal matrix of interaction coefficients; 1-based indices."""

    def __init__(self, coords, entries=None):
        self.coords = tuple(coords)
        self.n = len(self.coords)
        self._a: dict[tuple[int, int], Expr] = {}
        for (i, j), val in (entries or {}).items():
            self.set_entry(i, j, val)

    def set_entry(self, i, j, val: Expr):
        if i == j:
            raise DmzError("wave matrices have no diagonal entries")
        for idx in (i, j):
            if not 1 <= idx <= self.n:
                raise DmzError(f"index {idx} out of range 1..{self.n}")
        if val.is_zero_form():
            self._a.pop((i, j), None)
        else:
            self._a[(i, j)] = val

    def entry(self, i, j) -> Expr:
        if i == j:
            raise DmzError("wave matrices have no diagonal entries")
        return self._a.get((i, j), E.number(0))

    def ordered_pairs(self):
        return [(i, j) for i in range(1, self.n + 1)
                for j in range(1, self.n + 1) if i != j]

    def reindex(self, perm) -> "WaveMatrix":
        """Apply a permutation (1-based image list) to indices and
        coordinates simultaneously."""
        if sorted(perm) != list(range(1, self.n + 1)):
            raise DmzError("not a permutation of the index range")
        names = list(self.coords)
        new_coords = [None] * self.n
        for old, new in enumerate(perm, start=1):
            new_coords[new - 1] = names[old - 1]
        out = WaveMatrix(new_coords)
        for (i, j), val in self._a.items():
            out.set_entry(perm[i - 1], perm[j - 1], val)
        return out


def nwave_residuals(A: WaveMatrix) -> list[Residual]:
    """d A_jk / d x_i - A_ji A_ik over all distinct ordered triples."""
    out = []
    for i, j, k in permutations(range(1, A.n + 1), 3):
        r = (E.diff(A.entry(j, k), A.coords[i - 1])
             - A.entry(j, i) * A.entry(i, k))
        out.append(Residual("n-wave", (i, j, k), r))
    return _dedup_canonical(out)


def m3wri_residuals(G: WaveMatrix) -> list[Residual]:
    """d G_jk / d x_i - (G_ij - G_ik)(G_jk - G_ji) over distinct triples."""
    out = []
    for i, j, k in permutations(range(1, G.n + 1), 3):
        r = (E.diff(G.entry(j, k), G.coords[i - 1])
             - (G.entry(i, j) - G.entry(i, k)) * (G.entry(j, k) - G.entry(j, i)))
        out.append(Residual("modified-n-wave", (i, j, k), r))
    return _dedup_canonical(out)


def sergeev_constraint_residuals(S: DmzSystem) -> list[Residual]:
    """C_ij - G_ij G_ji: zero exactly on the modified-wave orbit point."""
    out = []
    for i, j in S.pairs():
        out.append(Residual("quadratic-constraint", (i, j),
                            S.c2(i, j) - S.gamma2(i, j) * S.gamma2(j, i)))
    return out


def wave_matrix_from_dmz(S: DmzSystem) -> WaveMatrix:
    """Read the two-index coefficients off a linear system."""
    out = WaveMatrix(S.coords)
    for i in range(1, S.n + 1):
        for j in range(1, S.n + 1):
            if i != j:
                out.set_entry(i, j, S.gamma2(i, j))
    return out


def wave_from_lame(pots: LamePotentials) -> WaveMatrix:
    """A_ij = (1/h_i) d h_j / d x_i; needs explicit potentials."""
    out = WaveMatrix(pots.coords)
    for i in range(1, pots.n + 1):
        for j in range(1, pots.n + 1):
            if i == j:
                continue
            out.set_entry(i, j, E.diff(pots.h(j), pots.coords[i - 1]) / pots.h(i))
    return out


def linear_problem_residuals(A: WaveMatrix, psi) -> list[Residual]:
    """d psi_j / d x_i - A_ji psi_i for the wave-amplitude vector psi."""
    psi = list(psi)
    if len(psi) != A.n:
        raise DmzError("need one amplitude per coordinate")
    out = []
    for i in range(1, A.n + 1):
        for j in range(1, A.n + 1):
            if i == j:
                continue
            r = E.diff(psi[j - 1], A.coords[i - 1]) - A.entry(j, i) * psi[i - 1]
            out.append(Residual("linear-problem", (i, j), r))
    return out


def m3wri_linear_problem_residuals(G: WaveMatrix, phi: Expr) -> list[Residual]:
    """Scalar linear problem of the modified system: the second-order
    operator with coefficients G and zeroth-order term G_ij G_ji applied
    to phi."""
    S = DmzSystem(G.coords)
    for i in range(1, G.n + 1):
        for j in range(1, G.n + 1):
            if i != j:
                S.set_gamma(i, j, j, G.entry(i, j))
    for i, j in S.pairs():
        S.set_c(i, j, G.entry(i, j) * G.entry(j, i))
    return [Residual("modified-linear-problem", idx, val)
            for idx, val in residual_operator_apply(S, phi)]


# ---------------------------------------------------------------------------
# potential (Lame) systems, in the squares


def half_lame_residuals(pots: LamePotentials, variant: str = "verbatim") -> list[Residual]:
    """Second-order system satisfied by potentials of an involutive C = 0
    system.

    Each listed residual is the equation for the triple (i, j, k) times
    2 h_i, expressed in the squares s_i.  The "verbatim" variant keeps
    the published form, whose last factor pair is
    (d h_k / d x_k)(d h_i / d x_j); "classical" uses the symmetric form
    (d h_k / d x_j)(d h_i / d x_k).  The bundled worked examples satisfy
    the classical variant; the verbatim one is kept for comparison.
    """
    if variant not in ("verbatim", "classical"):
        raise DmzError("variant must be 'verbatim' or 'classical'")
    coords = pots.coords
    out = []
    for i, j, k in permutations(range(1, pots.n + 1), 3):
        xj, xk = coords[j - 1], coords[k - 1]
        s_i, s_j, s_k = (pots.square(m) for m in (i, j, k))
        si_j = E.diff(s_i, xj)
        si_k = E.diff(s_i, xk)
        lead = E.diff(s_i, xj, xk) - si_j * si_k / (2 * s_i)
        termj = E.diff(s_j, xk) * si_j / (2 * s_j)
        if variant == "verbatim":
            termk = E.diff(s_k, xk) * si_j / (2 * s_k)
        else:
            termk = E.diff(s_k, xj) * si_k / (2 * s_k)
        out.append(Residual(f"half-lame-{variant}", (i, j, k), lead - termj - termk))
    return _dedup_canonical(out)


def full_lame_residuals(pots: LamePotentials, variant: str = "verbatim") -> list[Residual]:
    """Both families of the flatness system for an orthogonal web.

    Family one matches half_lame_residuals over all permutations; family
    two (the curvature sum, scaled by 2 h_i h_l) is the same in both
    variants.  A full pass certifies a flat diagonal metric; passing only
    the first family certifies diagonal curvature.
    """
    out = list(half_lame_residuals(pots, variant))
    coords = pots.coords
    for i in range(1, pots.n + 1):
        for l in range(i + 1, pots.n + 1):
            xi, xl = coords[i - 1], coords[l - 1]
            s_i, s_l = pots.square(i), pots.square(l)
            si_l = E.diff(s_i, xl)
            sl_i = E.diff(s_l, xi)
            t1 = (E.diff(s_i, xl, xl)
                  - si_l * (E.diff(s_l, xl) * s_i + s_l * si_l) / (2 * s_i * s_l))
            t2 = (E.diff(s_l, xi, xi)
                  - sl_i * (E.diff(s_i, xi) * s_l + s_i * sl_i) / (2 * s_l * s_i))
            t3 = E.number(0)
            for k in range(1, pots.n + 1):
                if k in (i, l):
                    continue
                xk = coords[k - 1]
                t3 = t3 + E.diff(s_i, xk) * E.diff(s_l, xk) / (2 * pots.square(k))
            out.append(Residual("curvature-sum", (i, l), t1 + t2 + t3))
    return out
