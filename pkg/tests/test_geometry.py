"""Charts, vector fields, brackets, distributions, and rank certificates."""

import random

import pytest

from conftest import vf
from dmzkit import expr as E
from dmzkit import geometry as G

P = E.parse

XYZ = G.Chart(("x", "y", "z"))


def random_field(chart, rng, deg=1):
    comps = []
    for _ in chart.names:
        e = E.number(rng.randint(-3, 3))
        for name in chart.names:
            c = rng.randint(-3, 3)
            if c:
                e = e + E.number(c) * E.var(name)
        comps.append(e)
    return G.VectorField(chart, comps)


# ---------------------------------------------------------------------------
# charts and fields


def test_chart_rejects_duplicate_names():
    with pytest.raises(G.GeometryError):
        G.Chart(("x", "y", "x"))


def test_chart_index_unknown_name():
    with pytest.raises(G.GeometryError):
        XYZ.index("w")


def test_field_component_count_checked():
    with pytest.raises(G.GeometryError):
        G.VectorField(XYZ, [P("1"), P("2")])


def test_field_application_is_a_derivation():
    X = vf(XYZ, {"x": "y", "z": "x*z"})
    f, g = P("x^2 + z"), P("y - z^3")
    left = X.apply(f * g)
    right = X.apply(f) * g + f * X.apply(g)
    assert left == right


def test_field_arithmetic_and_scaling():
    a = vf(XYZ, {"x": "1"})
    b = vf(XYZ, {"y": "x"})
    s = (a + b).scale(P("z"))
    assert s == vf(XYZ, {"x": "z", "y": "x*z"})
    assert (s - s).is_zero_form()
    assert (-a).components[0] == P("-1")


def test_fields_on_different_charts_do_not_mix():
    other = G.Chart(("x", "y"))
    with pytest.raises(G.GeometryError):
        vf(XYZ, {"x": "1"}) + vf(other, {"x": "1"})


# ---------------------------------------------------------------------------
# Lie bracket


def test_bracket_of_coordinate_fields_vanishes():
    assert G.lie_bracket(vf(XYZ, {"x": "1"}), vf(XYZ, {"y": "1"})).is_zero_form()


def test_bracket_known_example():
    X = vf(XYZ, {"x": "y"})
    Y = vf(XYZ, {"y": "x"})
    assert G.lie_bracket(X, Y) == vf(XYZ, {"y": "y", "x": "-x"})


def test_bracket_antisymmetry_random():
    rng = random.Random(11)
    for _ in range(10):
        a, b = random_field(XYZ, rng), random_field(XYZ, rng)
        assert (G.lie_bracket(a, b) + G.lie_bracket(b, a)).is_zero_form()


def test_bracket_jacobi_identity_random():
    rng = random.Random(12)
    for _ in range(5):
        a, b, c = (random_field(XYZ, rng) for _ in range(3))
        total = (G.lie_bracket(a, G.lie_bracket(b, c))
                 + G.lie_bracket(b, G.lie_bracket(c, a))
                 + G.lie_bracket(c, G.lie_bracket(a, b)))
        assert total.is_zero_form()


# ---------------------------------------------------------------------------
# rank over the function field

J2 = G.Chart(("z", "z0", "z1", "z2"))
CONTACT = G.Distribution(J2, [
    vf(J2, {"z": "1", "z0": "z1", "z1": "z2"}),
    vf(J2, {"z2": "1"}),
])


def test_rank_of_independent_and_dependent_sets():
    a = vf(XYZ, {"x": "1", "y": "z"})
    assert G.Distribution(XYZ, [a, a.scale(P("y"))]).rank == 1
    assert G.Distribution(XYZ, [a, vf(XYZ, {"z": "1"})]).rank == 2


def test_rank_report_certified_for_rational_entries():
    rr = CONTACT.rank_report()
    assert rr.rank == 2 and rr.certified


def test_rank_report_sampled_for_transcendental_entries():
    D = G.Distribution(XYZ, [vf(XYZ, {"x": "sin(x)"}), vf(XYZ, {"y": "1"})])
    rr = D.rank_report()
    assert rr.rank == 2
    assert not rr.certified


def test_contains_membership():
    assert CONTACT.contains(vf(J2, {"z": "2", "z0": "2*z1", "z1": "2*z2", "z2": "z"}))
    assert not CONTACT.contains(vf(J2, {"z0": "1"}))


# ---------------------------------------------------------------------------
# derived flag, Cauchy characteristics, derived type


def test_derived_flag_of_contact_plane():
    flag = G.derived_flag(CONTACT)
    assert [step.rank for step in flag] == [2, 3, 4]


def test_derived_type_of_contact_plane():
    assert G.derived_type(CONTACT) == [[2, 0], [3, 1], [4, 4]]


def test_derived_type_invariant_under_respanning():
    X, V = CONTACT.fields
    shuffled = G.Distribution(J2, [V, X + V.scale(P("z0"))])
    assert G.derived_type(shuffled) == G.derived_type(CONTACT)


def test_integrable_distribution_has_stable_flag():
    D = G.Distribution(XYZ, [vf(XYZ, {"x": "1"}), vf(XYZ, {"y": "1"})])
    assert len(G.derived_flag(D)) == 1
    ch = G.cauchy_characteristic(D)
    assert ch.rank == 2


def test_cauchy_characteristic_of_contact_plane_is_trivial():
    assert G.cauchy_characteristic(CONTACT).rank == 0


def test_cauchy_characteristic_membership_and_closure():
    # two contact planes side by side: ch of the first derived system is
    # spanned by the top-order verticals
    C6 = G.Chart(("x", "m0", "m1", "m2", "y", "n0", "n1", "n2"))
    D = G.Distribution(C6, [
        vf(C6, {"x": "1", "m0": "m1", "m1": "m2"}),
        vf(C6, {"m2": "1"}),
        vf(C6, {"y": "1", "n0": "n1", "n1": "n2"}),
        vf(C6, {"n2": "1"}),
    ])
    d1 = G.derived_flag(D)[1]
    ch = G.cauchy_characteristic(d1)
    assert ch.rank == 2
    for nm in ("m2", "n2"):
        assert ch.contains(vf(C6, {nm: "1"}))
    for f in ch.fields:
        assert d1.contains(f)
        for g in d1.fields:
            assert d1.contains(G.lie_bracket(f, g))


# ---------------------------------------------------------------------------
# hyperbolic structure report


def test_contact_plane_is_one_hyperbolic():
    rep = G.check_n_hyperbolic(J2, [tuple(CONTACT.fields)])
    assert rep
    assert rep.derived == [[2, 0], [3, 1], [4, 4]]
    assert rep.messages == []


def test_non_hyperbolic_structure_is_reported():
    X, V = CONTACT.fields
    rep = G.check_n_hyperbolic(J2, [(X, X.scale(P("2")))])
    assert not rep
    assert any("rank" in m for m in rep.messages)


def test_wrong_chart_dimension_is_reported():
    a = vf(XYZ, {"x": "1"})
    b = vf(XYZ, {"y": "1"})
    rep = G.check_n_hyperbolic(XYZ, [(a, b)])
    assert not rep
    assert any("dimension" in m for m in rep.messages)


# ---------------------------------------------------------------------------
# invariants


def test_verify_invariants_accepts_true_invariants():
    fields = [vf(XYZ, {"x": "1"}), vf(XYZ, {"y": "x"})]
    assert G.verify_invariants(fields, [P("z")], XYZ) == []


def test_verify_invariants_flags_failures():
    fields = [vf(XYZ, {"x": "1"})]
    msgs = G.verify_invariants(fields, [P("x"), P("y")], XYZ)
    assert any("annihilate" in m for m in msgs)
    # count mismatch: dim - rank = 2, two functions given, but one fails
    fields = [vf(XYZ, {"x": "1"}), vf(XYZ, {"y": "1"})]
    msgs = G.verify_invariants(fields, [P("z"), P("2*z")], XYZ)
    assert any("count" in m for m in msgs) or any("dependent" in m for m in msgs)


def test_verify_invariants_detects_dependence():
    fields = [vf(XYZ, {"x": "1"})]
    msgs = G.verify_invariants(fields, [P("z"), P("z^2")], XYZ)
    assert any("dependent" in m for m in msgs)
