"""Kernel contracts: canonical arithmetic, calculus, evaluation, zero tests.

The three randomized 1000-case suites at the bottom are the acceptance
gate for the kernel; their seeds are fixed so failures are reproducible.
"""

import random
from fractions import Fraction

import pytest

from dmzkit import expr as E


def rat(p, q=1):
    return E.number(Fraction(p, q))


X, Y, Z = E.var("x"), E.var("y"), E.var("z")


# ---------------------------------------------------------------------------
# parsing and rendering


def test_parse_simple_fraction():
    e = E.parse("1/(x - z)")
    assert E.render(e) == "1/(x - z)"


def test_parse_rejects_decimals():
    with pytest.raises(E.ExprSyntaxError) as err:
        E.parse("x + 1.5")
    assert err.value.offset == 5


def test_parse_rejects_unknown_function():
    with pytest.raises(E.ExprSyntaxError) as err:
        E.parse("x + foo(y)")
    assert "foo" in str(err.value)
    assert err.value.offset == 4


def test_parse_rejects_trailing_garbage():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("x + y)")


def test_parse_rejects_dangling_operator():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("x *")


def test_parse_offset_is_in_bytes():
    # two-byte character before the offending token
    with pytest.raises(E.ExprSyntaxError) as err:
        E.parse("(é + .5)")
    assert err.value.offset == 6


def test_parse_leading_minus():
    assert E.parse("-x + 1") == rat(1) - X


def test_parse_negative_exponent_renders_as_division():
    e = E.parse("x^-2")
    assert E.render(e) == "1/x^2"
    assert E.parse(E.render(e)) == e


def test_parse_power_binds_tighter_than_product():
    assert E.parse("2*x^3") == rat(2) * X ** 3


def test_parse_division_is_left_associative():
    assert E.parse("x/2/y") == X / (rat(2) * Y)


def test_integer_division_makes_exact_rationals():
    assert E.parse("3/4") == rat(3, 4)
    assert E.parse("6/4") == rat(3, 2)


def test_division_by_literal_zero():
    with pytest.raises(E.PoleError):
        E.parse("1/0")
    with pytest.raises(E.PoleError):
        E.parse("1/(2 - 2)")


def test_unknown_character_offset():
    with pytest.raises(E.ExprSyntaxError) as err:
        E.parse("x + $")
    assert err.value.offset == 4


def test_render_deterministic():
    a = E.parse("(y + x)*(y - x)")
    b = E.parse("y^2 - x^2")
    assert E.render(a) == E.render(b)


def test_canonical_form_unique_for_rational_functions():
    a = E.parse("(x^2 - 1)/(x - 1)")
    b = E.parse("x + 1")
    assert a == b
    assert hash(a) == hash(b)


def test_denominator_normalisation():
    # all rational content is pushed into the numerator, denominator is
    # integer-primitive with positive leading coefficient
    e = E.parse("x/(2 - 2*y)")
    assert E.render(e) == "-x/2/(y - 1)"
    assert E.parse(E.render(e)) == e


def test_functions_parse_and_render():
    e = E.parse("sin(x)^2*cosh(y) - ln(z)/exp(x)")
    assert E.parse(E.render(e)) == e


def test_nested_function_arguments_are_canonicalized():
    a = E.parse("sin((x^2 - 1)/(x - 1))")
    b = E.parse("sin(x + 1)")
    assert a == b


def test_opaque_function_parse_requires_declaration():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("f(x)")
    e = E.parse("f(x)", opaque=("f",))
    assert E.opaque_names(e) == {"f"}


def test_opaque_function_argument_must_be_variable():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("f(x + 1)", opaque=("f",))


def test_opaque_derivative_marks_roundtrip():
    e = E.parse("f''(u1) - f'(u1)*f(u1)", opaque=("f",))
    assert E.parse(E.render(e), opaque=("f",)) == e


# ---------------------------------------------------------------------------
# calculus


def test_diff_basic():
    assert E.diff(E.parse("x^3*y"), "x") == E.parse("3*x^2*y")


def test_diff_quotient():
    e = E.parse("x/(x + y)")
    assert E.diff(e, "x") == E.parse("y/(x^2 + 2*x*y + y^2)")


def test_diff_chain_rule_through_functions():
    e = E.parse("sin(x^2)")
    assert E.diff(e, "x") == E.parse("2*x*cos(x^2)")


def test_diff_ln_stays_rational():
    e = E.parse("ln(z*(x - z))")
    dx = E.diff(e, "x")
    assert E.is_rational_function(dx)
    assert dx == E.parse("1/(x - z)")


def test_diff_opaque_chain_rule():
    e = E.parse("f(u)^2", opaque=("f",))
    d = E.diff(e, "u")
    assert d == E.parse("2*f(u)*f'(u)", opaque=("f",))


def test_substitute_simultaneous():
    e = E.parse("x*y")
    out = E.substitute(e, {"x": Y, "y": X})
    assert out == E.parse("x*y")
    out2 = E.substitute(e, {"x": X + Y})
    assert out2 == E.parse("(x + y)*y")


def test_substitute_opaque_argument_guard():
    e = E.parse("f(x)", opaque=("f",))
    assert E.substitute(e, {"x": Y}) == E.parse("f(y)", opaque=("f",))
    with pytest.raises(E.ExprError):
        E.substitute(e, {"x": X + Y})


def test_instantiate_opaque():
    e = E.parse("f'(x)*g(y)", opaque=("f", "g"))
    out = E.instantiate(e, {"f": ("s", E.parse("s^3")), "g": ("s", E.parse("s + 1"))})
    assert out == E.parse("3*x^2*(y + 1)")


def test_antiderivative_log_case():
    F = E.antiderivative(E.parse("1/(x - z)"), "x")
    assert E.diff(F, "x") == E.parse("1/(x - z)")


def test_antiderivative_polynomial():
    F = E.antiderivative(E.parse("x^2*y"), "x")
    assert F == E.parse("x^3*y/3")


def test_antiderivative_constant_in_variable():
    assert E.antiderivative(E.parse("y^2"), "x") == E.parse("x*y^2")


def test_antiderivative_refuses_non_rational():
    with pytest.raises(E.NonRationalIntegrand):
        E.antiderivative(E.parse("sin(x)"), "x")


def test_antiderivative_refuses_arctangent_case():
    with pytest.raises(E.NonElementaryAntiderivative):
        E.antiderivative(E.parse("1/(x^2 + 1)"), "x")


def test_antiderivative_transcendental_coefficients_ok():
    F = E.antiderivative(E.parse("sin(y)/x"), "x")
    assert E.diff(F, "x") == E.parse("sin(y)/x")


# ---------------------------------------------------------------------------
# evaluation


def test_eval_exact_fraction():
    v = E.eval_at(E.parse("x^2/(y + 1)"), {"x": Fraction(3, 2), "y": Fraction(1)})
    assert v == Fraction(9, 8)


def test_eval_pole():
    with pytest.raises(E.PoleError):
        E.eval_at(E.parse("1/(x - 1)"), {"x": Fraction(1)})


def test_eval_missing_variable():
    with pytest.raises(E.ExprError):
        E.eval_at(E.parse("x + y"), {"x": Fraction(0)})


def test_eval_interval_encloses_truth():
    iv = E.eval_at(E.parse("exp(x)"), {"x": Fraction(0)})
    assert iv.contains(Fraction(1))
    assert iv.width < Fraction(1, 2 ** 200)


def test_eval_interval_transcendental():
    iv = E.eval_at(E.parse("sin(x)^2 + cos(x)^2"), {"x": Fraction(7, 3)})
    assert iv.contains(Fraction(1))


def test_eval_ln_domain():
    with pytest.raises(E.PoleError):
        E.eval_at(E.parse("ln(x)"), {"x": Fraction(-1)})


def test_eval_refuses_opaque():
    with pytest.raises(E.ExprError):
        E.eval_at(E.parse("f(x)", opaque=("f",)), {"x": Fraction(1)})


# ---------------------------------------------------------------------------
# zero verdicts


def test_is_zero_provable_rational():
    assert isinstance(E.is_zero(E.parse("(x + y)^2 - x^2 - 2*x*y - y^2")), E.ProvablyZero)
    assert isinstance(E.is_zero(E.parse("x - y")), E.ProvablyNonzero)


def test_is_zero_bounded_rewrite_proves_identities():
    for text in [
        "sin(x)^2 + cos(x)^2 - 1",
        "cosh(x)^2 - sinh(x)^2 - 1",
        "tanh(x)^2 - 1 + 1/cosh(x)^2",
        "tan(x)*cos(x) - sin(x)",
        "exp(x)*exp(y) - exp(x + y)",
        "ln(exp(x)) - x",
        "exp(ln(x)) - x",
    ]:
        assert E.is_zero(E.parse(text)).proved, text


def test_is_zero_sampling_zero():
    v = E.is_zero(E.parse("sin(2*x) - 2*sin(x)*cos(x)"))
    assert v.zero and isinstance(v, E.ProbablyZero) and v.samples >= 32


def test_is_zero_sampling_nonzero_has_witness():
    v = E.is_zero(E.parse("sin(x) - cos(x)"))
    assert isinstance(v, E.ProbablyNonzero)
    assert set(v.witness) == {"x"}
    iv = E.eval_at(E.parse("sin(x) - cos(x)"), v.witness)
    assert iv.abs_min() > 0


def test_is_zero_seed_determinism():
    a = E.is_zero(E.parse("sin(x) - cos(x)"), seed=5)
    b = E.is_zero(E.parse("sin(x) - cos(x)"), seed=5)
    assert a == b


def test_is_zero_indeterminate_when_always_singular():
    e = E.parse("1/(sin(x)^2 + cos(x)^2 - 1)")
    with pytest.raises(E.IndeterminateError):
        E.is_zero(e)


def test_is_zero_refuses_opaque():
    with pytest.raises(E.ExprError):
        E.is_zero(E.parse("f(x) - f(x)", opaque=("f",)) + E.parse("f(x)", opaque=("f",)))


def test_verdict_truthiness():
    assert E.ProvablyZero() and E.ProbablyZero(samples=32)
    assert not E.ProvablyNonzero() and not E.ProbablyNonzero(witness={})


# ---------------------------------------------------------------------------
# randomized 1000-case suites


def _random_rational_expr(rng, depth=3, allow_div=True):
    if depth == 0:
        choice = rng.random()
        if choice < 0.45:
            return [X, Y, Z][rng.randrange(3)]
        return rat(rng.randint(-6, 6), rng.randint(1, 4))
    op = rng.random()
    a = _random_rational_expr(rng, depth - 1, allow_div)
    b = _random_rational_expr(rng, depth - 1, allow_div)
    if op < 0.3:
        return a + b
    if op < 0.55:
        return a - b
    if op < 0.8:
        return a * b
    if op < 0.9 and allow_div:
        if b.is_zero_form():
            b = b + rat(1)
        return a / b
    return a ** rng.randint(0, 3)


def test_ring_laws_1000_cases():
    rng = random.Random(1301)
    for _ in range(1000):
        a = _random_rational_expr(rng, 2)
        b = _random_rational_expr(rng, 2)
        c = _random_rational_expr(rng, 2)
        assert (a + b) + c == a + (b + c)
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert (a - a).is_zero_form()
        if not b.is_zero_form():
            assert (a / b) * b == a


def test_derivative_linearity_and_clairaut_1000_cases():
    rng = random.Random(2477)
    for _ in range(1000):
        a = _random_rational_expr(rng, 2)
        b = _random_rational_expr(rng, 2)
        assert E.diff(a + b, "x") == E.diff(a, "x") + E.diff(b, "x")
        assert E.diff(a * b, "x") == E.diff(a, "x") * b + a * E.diff(b, "x")
        assert E.diff(a, "x", "y") == E.diff(a, "y", "x")


def _random_smooth_expr(rng):
    # polynomial part plus a fraction whose denominator stays away from 0,
    # so third derivatives stay small enough for the finite-difference bound
    terms = []
    for _ in range(rng.randint(1, 4)):
        cx = rng.randint(0, 2)
        cy = rng.randint(0, 2)
        coeff = rat(rng.randint(-5, 5), rng.randint(1, 3))
        terms.append(coeff * X ** cx * Y ** cy)
    e = sum(terms, rat(0))
    if rng.random() < 0.5:
        p = rat(rng.randint(-4, 4)) * X + rat(rng.randint(-4, 4)) * Y + rat(rng.randint(-3, 3))
        e = e + p / (rat(1) + X ** 2 + Y ** 2)
    return e


def test_finite_difference_agreement_1000_cases():
    rng = random.Random(911)
    h = Fraction(1, 10 ** 6)
    bound = Fraction(1, 10 ** 8)
    for _ in range(1000):
        e = _random_smooth_expr(rng)
        d = E.diff(e, "x")
        pt = {"x": Fraction(rng.randint(-8, 8), 4), "y": Fraction(rng.randint(-8, 8), 4)}
        up = dict(pt, x=pt["x"] + h)
        dn = dict(pt, x=pt["x"] - h)
        fd = (E.eval_at(e, up) - E.eval_at(e, dn)) / (2 * h)
        exact = E.eval_at(d, pt)
        assert abs(exact - fd) <= bound


def test_parse_render_roundtrip_500_cases():
    rng = random.Random(777)
    for _ in range(500):
        e = _random_rational_expr(rng, 3)
        if rng.random() < 0.25:
            wrap = [E.parse("sin(x)"), E.parse("exp(y)"), E.parse("cosh(z)")][rng.randrange(3)]
            e = e + wrap * rat(rng.randint(-3, 3))
        text = E.render(e)
        assert E.parse(text) == e
        assert E.render(E.parse(text)) == text
