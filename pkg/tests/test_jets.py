"""Jet products, prolongation, pushforward along invertible maps, and
assembly of split distributions from quotient pieces."""

import pytest

from conftest import vf
from dmzkit import expr as E
from dmzkit import geometry as G
from dmzkit import jets as J

P = E.parse

J2 = J.JetProduct([J.JetFactor(2, "z", "z")])
J4 = J.JetProduct([J.JetFactor(4, "z", "q")])
J22 = J.JetProduct([J.JetFactor(2, "x", "m"), J.JetFactor(2, "y", "n")])


# ---------------------------------------------------------------------------
# contact bases and total derivatives


def test_single_factor_chart_layout():
    assert J2.chart.names == ("z", "z0", "z1", "z2")


def test_contact_basis_single_factor():
    (plane,) = J.contact_basis(J2)
    assert plane.rank == 2
    X, V = plane.fields
    assert X == vf(J2.chart, {"z": "1", "z0": "z1", "z1": "z2"})
    assert V == vf(J2.chart, {"z2": "1"})


def test_contact_basis_two_factors_are_independent():
    planes = J.contact_basis(J22)
    assert len(planes) == 2
    full = G.Distribution(J22.chart, [f for pl in planes for f in pl.fields])
    assert full.rank == 4


def test_total_derivative_reproduces_contact_direction():
    X = J.total_derivative_field(J22, 0)
    assert X == vf(J22.chart, {"x": "1", "m0": "m1", "m1": "m2"})


# ---------------------------------------------------------------------------
# prolongation


def test_prolong_scaling_symmetry():
    got = J.prolong(J2, vf(J2.chart, {"z0": "z0"}))
    assert got == vf(J2.chart, {"z0": "z0", "z1": "z1", "z2": "z2"})


def test_prolong_translation_symmetry():
    got = J.prolong(J2, vf(J2.chart, {"z0": "1"}))
    assert got == vf(J2.chart, {"z0": "1"})


def test_prolong_polynomial_generators_commute():
    gens = [
        J.prolong(J4, vf(J4.chart, {"q0": "-z^2/2"})),
        J.prolong(J4, vf(J4.chart, {"q0": "z/2"})),
        J.prolong(J4, vf(J4.chart, {"q0": "-1/6"})),
        J.prolong(J4, vf(J4.chart, {"q0": "z^3/6"})),
    ]
    assert gens[0] == vf(J4.chart, {"q0": "-z^2/2", "q1": "-z", "q2": "-1"})
    assert gens[3] == vf(J4.chart, {"q0": "z^3/6", "q1": "z^2/2",
                                    "q2": "z", "q3": "1"})
    for a in gens:
        for b in gens:
            assert G.lie_bracket(a, b).is_zero_form()


def test_prolongation_preserves_contact_plane():
    pr = J.prolong(J2, vf(J2.chart, {"z": "z", "z0": "z0"}))
    (plane,) = J.contact_basis(J2)
    for f in plane.fields:
        assert plane.with_fields([G.lie_bracket(pr, f)]).rank == 2


def test_prolong_rejects_jet_coefficient_generator():
    with pytest.raises(J.JetsError):
        J.prolong(J2, vf(J2.chart, {"z1": "1"}))


def test_prolong_rejects_dependence_on_derivatives():
    with pytest.raises(J.JetsError):
        J.prolong(J2, vf(J2.chart, {"z0": "z1"}))


# ---------------------------------------------------------------------------
# symbolic maps and pushforward


def quotient_map_order2():
    target = G.Chart(("z", "v1", "b1", "b2"))
    phi = J.SymbolicMap(J2.chart, target,
                        [P("z"), P("z2/z1"), P("z1"), P("-z0")],
                        inverse=[P("z"), P("-b2"), P("b1"), P("v1*b1")])
    return target, phi


def test_verify_inverse_passes_for_consistent_pair():
    _, phi = quotient_map_order2()
    phi.verify_inverse()


def test_identity_map_pushforward_is_identity():
    (plane,) = J.contact_basis(J2)
    out = J.pushforward(J.identity_map(J2.chart), plane)
    assert list(out.fields) == list(plane.fields)


def test_pushforward_of_contact_plane():
    target, phi = quotient_map_order2()
    out = J.pushforward(phi, J.contact_basis(J2)[0])
    assert out.fields[0] == vf(target, {"z": "1", "v1": "-v1^2",
                                        "b1": "v1*b1", "b2": "-b1"})
    assert out.contains(vf(target, {"v1": "1"}))


def test_pushforward_respects_brackets():
    target, phi = quotient_map_order2()
    (plane,) = J.contact_basis(J2)
    a, b = plane.fields
    push = lambda f: J.pushforward(phi, G.Distribution(J2.chart, [f])).fields[0]
    assert G.lie_bracket(push(a), push(b)) == push(G.lie_bracket(a, b))


def test_pushforward_with_wrong_inverse_is_caught():
    target = G.Chart(("z", "v1", "b1", "b2"))
    bad = J.SymbolicMap(J2.chart, target,
                        [P("z"), P("z2/z1"), P("z1"), P("-z0")],
                        inverse=[P("z"), P("b2"), P("b1"), P("v1*b1")])
    with pytest.raises(J.JetsError):
        J.pushforward(bad, J.contact_basis(J2)[0])


def test_two_factor_quotient_pushforwards():
    target = G.Chart(("x", "v1", "y", "v2", "b1", "b2", "b3", "b4"))
    phi = J.SymbolicMap(J22.chart, target,
                        [P("x"), P("m2"), P("y"), P("n2"), P("m1"),
                         P("x*m1 - m0"), P("n1"), P("y*n1 - n0")],
                        inverse=[P("x"), P("x*b1 - b2"), P("b1"), P("v1"),
                                 P("y"), P("y*b3 - b4"), P("b3"), P("v2")])
    pA, pB = [J.pushforward(phi, c) for c in J.contact_basis(J22)]
    assert pA.fields[0] == vf(target, {"x": "1", "b1": "v1", "b2": "x*v1"})
    assert pB.fields[0] == vf(target, {"y": "1", "b3": "v2", "b4": "y*v2"})
    assert pA.contains(vf(target, {"v1": "1"}))
    assert pB.contains(vf(target, {"v2": "1"}))


# ---------------------------------------------------------------------------
# assembly of quotient pieces


def assembled_pair():
    target = G.Chart(("x", "v1", "y", "v2", "b1", "b2", "b3", "b4"))
    phi = J.SymbolicMap(J22.chart, target,
                        [P("x"), P("m2"), P("y"), P("n2"), P("m1"),
                         P("x*m1 - m0"), P("n1"), P("y*n1 - n0")],
                        inverse=[P("x"), P("x*b1 - b2"), P("b1"), P("v1"),
                                 P("y"), P("y*b3 - b4"), P("b3"), P("v2")])
    zt = G.Chart(("z", "u", "c1", "c2", "c3", "c4"))
    psi = J.SymbolicMap(J4.chart, zt,
                        [P("z"), P("q4"), P("q2 - z*q3"),
                         P("2*z*q2 - z^2*q3 - 2*q1"),
                         P("6*q0 - 6*z*q1 + 3*z^2*q2 - z^3*q3"), P("-q3")],
                        inverse=[P("z"),
                                 P("(c3 + 3*z^2*c1 - 3*z*c2 - z^3*c4)/6"),
                                 P("z*c1 - z^2*c4/2 - c2/2"),
                                 P("c1 - z*c4"), P("-c4"), P("u")])
    pieces = [J.pushforward(phi, c) for c in J.contact_basis(J22)]
    pieces.append(J.pushforward(psi, J.contact_basis(J4)[0]))
    return pieces


def test_assemble_quotient_identifies_shared_directions():
    pieces = assembled_pair()
    renaming = {"b1": "w1", "b2": "w2", "b3": "w3", "b4": "w4",
                "c1": "w1", "c2": "w2", "c3": "w3", "c4": "w4"}
    asm = J.assemble_quotient_H(
        pieces, renaming,
        chart_names=("x", "y", "z", "v1", "v2", "u", "w1", "w2", "w3", "w4"))
    C = asm.chart
    assert asm.parts[0][0] == vf(C, {"x": "1", "w1": "v1", "w2": "x*v1"})
    assert asm.parts[2][0] == vf(C, {"z": "1", "w1": "-z*u", "w2": "-z^2*u",
                                     "w3": "-z^3*u", "w4": "-u"})
    rep = G.check_n_hyperbolic(C, asm.parts)
    assert rep, rep.messages
    assert rep.derived == [[6, 0], [9, 3], [10, 10]]


def test_assemble_quotient_rejects_collision_within_one_chart():
    pieces = assembled_pair()
    renaming = {"b1": "w1", "b2": "w2", "b3": "w3", "b4": "w4",
                "c1": "w1", "c2": "w1", "c3": "w3", "c4": "w4"}
    with pytest.raises(J.JetsError) as err:
        J.assemble_quotient_H(pieces, renaming)
    assert "merge" in str(err.value)


def test_assemble_quotient_rejects_wrong_chart_names():
    pieces = assembled_pair()
    renaming = {"b1": "w1", "b2": "w2", "b3": "w3", "b4": "w4",
                "c1": "w1", "c2": "w2", "c3": "w3", "c4": "w4"}
    with pytest.raises(J.JetsError):
        J.assemble_quotient_H(pieces, renaming,
                              chart_names=("x", "y", "z", "v1", "v2", "u",
                                           "w1", "w2", "w3", "other"))


def test_assemble_quotient_dimension_check():
    pieces = assembled_pair()
    # forgetting to identify the group blocks leaves a 14-dimensional chart
    with pytest.raises(J.JetsError) as err:
        J.assemble_quotient_H(pieces, {})
    assert "dimension" in str(err.value)
