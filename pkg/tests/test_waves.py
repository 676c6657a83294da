"""Interaction-coefficient matrices, the two wave systems, amplitude
linear problems, and the potential (web-flatness) residual families."""

import pytest

from conftest import load_dmz, load_file
from dmzkit import dmz as D
from dmzkit import expr as E
from dmzkit import waves as W

P = E.parse


def bundled_wave(name):
    return load_file(name).wave()


# ---------------------------------------------------------------------------
# matrix container


def test_no_diagonal_entries():
    A = W.WaveMatrix(("x", "y"))
    with pytest.raises(D.DmzError):
        A.set_entry(1, 1, P("1"))
    with pytest.raises(D.DmzError):
        A.entry(2, 2)


def test_zero_entries_are_dropped():
    A = W.WaveMatrix(("x", "y"))
    A.set_entry(1, 2, P("x - x"))
    assert A.entry(1, 2).is_zero_form()
    assert A.ordered_pairs() == [(1, 2), (2, 1)]


def test_reindex_requires_a_permutation():
    A = W.WaveMatrix(("x", "y", "z"))
    with pytest.raises(D.DmzError):
        A.reindex([1, 1, 2])


def test_reindex_round_trip():
    A = bundled_wave("threewave0.wave")
    perm = [2, 3, 1]
    inverse = [3, 1, 2]
    back = A.reindex(perm).reindex(inverse)
    assert back.coords == A.coords
    for i, j in A.ordered_pairs():
        assert back.entry(i, j) == A.entry(i, j)


def test_wave_matrix_from_linear_system():
    S = load_dmz("m3wrisol.dmz")
    A = W.wave_matrix_from_dmz(S)
    for i, j in A.ordered_pairs():
        assert A.entry(i, j) == S.gamma2(i, j)


# ---------------------------------------------------------------------------
# residual systems


def test_bundled_interaction_solutions_satisfy_the_wave_system():
    for name in ("threewave0.wave", "threewave1.wave"):
        A = bundled_wave(name)
        for r in W.nwave_residuals(A):
            assert E.is_zero(r.value).zero, (name, r.indices)


def test_wave_residuals_detect_perturbations():
    A = bundled_wave("threewave0.wave")
    A.set_entry(1, 3, A.entry(1, 3) + P("1"))
    assert any(not E.is_zero(r.value).zero for r in W.nwave_residuals(A))


def test_wave_residuals_commute_with_reindexing():
    A = bundled_wave("threewave1.wave").reindex([3, 1, 2])
    for r in W.nwave_residuals(A):
        assert E.is_zero(r.value).zero


def test_bundled_modified_solution_satisfies_the_modified_system():
    Gm = bundled_wave("m3wave.wave")
    for r in W.m3wri_residuals(Gm):
        assert E.is_zero(r.value).zero, r.indices


def test_modified_residuals_detect_perturbations():
    Gm = bundled_wave("m3wave.wave")
    Gm.set_entry(2, 1, Gm.entry(2, 1) + P("x"))
    assert any(not E.is_zero(r.value).zero for r in W.m3wri_residuals(Gm))


def test_quadratic_constraint_on_the_bundled_pair():
    M = load_dmz("m3wrisol.dmz")
    for r in W.sergeev_constraint_residuals(M):
        assert r.value.is_zero_form(), r.indices
    N = load_dmz("newdmz.dmz")  # zero potential, nonzero products
    assert any(not E.is_zero(r.value).zero
               for r in W.sergeev_constraint_residuals(N))


# ---------------------------------------------------------------------------
# potentials -> interaction matrix


def newdmz_potentials():
    return D.LamePotentials(
        ("x", "y", "z"),
        h=[P("(y*z^3 - 1)/(z*(z - x))"), P("y"),
           P("(2*x*y*z^3 + x - 2*z - y*z^4)/(x - z)")])


def test_wave_from_lame_entry_formula():
    pots = D.LamePotentials(("x", "y", "z"), h=[P("y"), P("x"), P("1")])
    A = W.wave_from_lame(pots)
    assert A.entry(1, 2) == P("1/y")
    assert A.entry(2, 1) == P("1/x")
    assert A.entry(3, 1).is_zero_form()


def test_wave_from_lame_needs_explicit_potentials():
    pots = D.LamePotentials.from_squares(("x", "y"), [P("x^2"), P("1")])
    with pytest.raises(D.DmzError):
        W.wave_from_lame(pots)


def test_wave_from_lame_matches_bundled_matrix():
    A = W.wave_from_lame(newdmz_potentials())
    T = bundled_wave("threewave0.wave")
    for i, j in A.ordered_pairs():
        assert E.is_zero(A.entry(i, j) - T.entry(i, j)).zero, (i, j)


# ---------------------------------------------------------------------------
# amplitude linear problems


def test_linear_problem_solved_by_the_potentials():
    # the potential property d h_j / d x_i = A_ij h_i says exactly that
    # the h vector solves the problem attached to the transposed matrix
    pots = newdmz_potentials()
    A = W.wave_from_lame(pots)
    T = W.WaveMatrix(A.coords)
    for i, j in A.ordered_pairs():
        T.set_entry(i, j, A.entry(j, i))
    psi = [pots.h(i) for i in (1, 2, 3)]
    for r in W.linear_problem_residuals(T, psi):
        assert E.is_zero(r.value).zero, r.indices


def test_linear_problem_exponential_example():
    A = W.WaveMatrix(("x", "y"))
    A.set_entry(1, 2, P("x"))
    A.set_entry(2, 1, P("y"))
    psi = [P("exp(x*y)"), P("exp(x*y)")]
    for r in W.linear_problem_residuals(A, psi):
        assert E.is_zero(r.value).zero, r.indices


def test_linear_problem_checks_length():
    A = W.WaveMatrix(("x", "y"))
    with pytest.raises(D.DmzError):
        W.linear_problem_residuals(A, [P("1")])


def test_modified_linear_problem_on_bundled_solution():
    Gm = bundled_wave("m3wave.wave")
    phi = P("z*(x - z)")
    for r in W.m3wri_linear_problem_residuals(Gm, phi):
        assert E.is_zero(r.value).zero, r.indices


# ---------------------------------------------------------------------------
# web-flatness residuals


def test_half_system_vanishes_for_product_webs():
    pots = D.LamePotentials(("x", "y", "z"), h=[P("x"), P("1"), P("1")])
    for variant in ("verbatim", "classical"):
        for r in W.half_lame_residuals(pots, variant):
            assert E.is_zero(r.value).zero, (variant, r.indices)


def test_variant_name_is_checked():
    pots = D.LamePotentials(("x", "y"), h=[P("1"), P("1")])
    with pytest.raises(D.DmzError):
        W.half_lame_residuals(pots, "other")


def test_flat_squares_pass_the_full_system():
    squares = [P("cosh(x)^2 - cos(y)^2"), P("cosh(x)^2 - cos(y)^2"),
               P("cosh(x)^2*cos(y)^2")]
    pots = D.LamePotentials.from_squares(("x", "y", "z"), squares)
    for r in W.full_lame_residuals(pots, "classical"):
        assert E.is_zero(r.value).zero, (r.family, r.indices)


def test_curved_web_fails_only_the_curvature_sums():
    pots = newdmz_potentials()
    half = {(r.family, r.indices) for r in W.half_lame_residuals(pots, "classical")
            if not E.is_zero(r.value).zero}
    assert half == set()
    full_bad = [r.family for r in W.full_lame_residuals(pots, "classical")
                if not E.is_zero(r.value).zero]
    assert full_bad and set(full_bad) == {"curvature-sum"}
