import math

import pytest
from hypothesis import given, strategies as st

from fracvar.errors import (
    DomainError,
    ExponentDomainError,
    ExprSyntaxError,
    MissingVariableError,
    NonLiteralExponentError,
    PoleError,
    UnknownVariableError,
)
from fracvar.expr import (
    BranchRule,
    DerivKind,
    Monomial,
    PowerExpr,
    SingularValueError,
    canonicalize,
    compile_expr,
    evaluate,
    expr_equal,
    frac_partial,
    parse_expr,
    partial,
)
from fracvar.specialfn import gamma

Q = ["q", "p", "v"]


def P(text, chart=Q):
    return parse_expr(text, chart)


@pytest.mark.parametrize("text, shown", [
    ("p*v^0.5 - (q - 1)*q", "p*v^0.5 - q^2 + q"),
    ("2*q^2*p - 3", "2*p*q^2 - 3"),
    ("(q+p)^2", "p^2 + 2*p*q + q^2"),
    ("q^-0.5 + 1/2", "q^-0.5 + 0.5"),
    ("q*q^(-1)", "1"),
    ("-q", "-q"),
    ("q - q", "0"),
    ("(2*q)^0.5", "1.4142135623730951*q^0.5"),
])
def test_parse_canonical_text(text, shown):
    assert P(text).to_text() == shown


def test_parse_params_substituted():
    e = parse_expr("-gamma*p", ["q", "p"], {"gamma": 0.1})
    assert e.to_text() == "-0.1*p"


@pytest.mark.parametrize("text, exc, offset", [
    ("q + ", ExprSyntaxError, 4),
    ("q ^ p", NonLiteralExponentError, 4),
    ("q^(1+1)", ExprSyntaxError, 4),
    ("q $ 1", ExprSyntaxError, 2),
    ("q / p", ExprSyntaxError, 2),
    ("x*2", UnknownVariableError, 0),
    ("(q", ExprSyntaxError, 2),
    ("1/0", ExprSyntaxError, 1),
    ("", ExprSyntaxError, 0),
    # offsets count bytes: the accented letter takes two
    ("é*q + $", ExprSyntaxError, 0),
    ("q + é", ExprSyntaxError, 4),
])
def test_parse_errors(text, exc, offset):
    with pytest.raises(exc) as info:
        P(text)
    assert info.value.offset == offset


def test_negative_power_of_sum_rejected():
    with pytest.raises(ExprSyntaxError):
        P("(q + 1)^0.5")


def test_exponent_snapping_merges_terms():
    a = PowerExpr.var("q", 2 - 0.3 - 0.3)
    b = PowerExpr.var("q", 1.4)
    assert (a - b).is_zero()


def test_partial():
    e = P("q^3*p + 2*q - 5")
    assert partial(e, "q").to_text() == "3*p*q^2 + 2"
    assert partial(e, "q", 2).to_text() == "6*p*q"
    assert partial(e, "v").is_zero()


def test_frac_partial_power_rule():
    d = frac_partial(P("q^2"), "q", 0.5)
    assert expr_equal(d, PowerExpr.var("q", 1.5, 2 / gamma(2.5)), 1e-14)
    assert d.terms[0].coeff == pytest.approx(1.5045055561273502, rel=1e-13)


def test_frac_partial_caputo_kills_constants():
    d = frac_partial(P("7 + q"), "q", 0.5)
    # D^0.5 q = q^0.5 / G(1.5) = 2/sqrt(pi) q^0.5
    assert expr_equal(d, PowerExpr.var("q", 0.5, 2 / math.sqrt(math.pi)), 1e-14)


def test_frac_partial_rl_keeps_constants():
    d = frac_partial(P("7"), "q", 0.5, DerivKind.RIEMANN_LIOUVILLE)
    assert expr_equal(d, PowerExpr.var("q", -0.5, 7 / math.sqrt(math.pi)), 1e-14)


def test_frac_partial_higher_order():
    # caputo of order 1.5 keeps q^2 and kills q
    d = frac_partial(P("q^2 + q"), "q", 1.5)
    assert expr_equal(d, PowerExpr.var("q", 0.5, 2 / gamma(1.5)), 1e-14)
    rl = frac_partial(P("q"), "q", 1.5, DerivKind.RIEMANN_LIOUVILLE)
    assert expr_equal(rl, PowerExpr.var("q", -0.5, 1 / gamma(0.5)), 1e-14)


def test_frac_partial_other_variables_are_constants():
    e = P("p^2*q")
    d = frac_partial(e, "q", 0.5)
    assert expr_equal(d, P("p^2") * PowerExpr.var("q", 0.5, 1 / gamma(1.5)), 1e-14)


def test_frac_partial_errors():
    with pytest.raises(ExponentDomainError):
        frac_partial(P("q^-1"), "q", 0.5)
    with pytest.raises(PoleError):
        frac_partial(P("q^-0.5"), "q", 0.5)
    with pytest.raises(ValueError):
        frac_partial(P("q"), "q", 0.0)


def test_integer_order_matches_partial():
    e = P("q^3*p - 2*q^0.5 + 4")
    assert expr_equal(frac_partial(e, "q", 1.0), partial(e, "q"), 1e-15)


def test_evaluate():
    e = P("q^2*p + q^0.5")
    assert evaluate(e, {"q": 4.0, "p": 0.5}) == 10.0
    with pytest.raises(DomainError):
        evaluate(e, {"q": -4.0, "p": 0.5})
    with pytest.raises(MissingVariableError):
        evaluate(e, {"q": 4.0})


def test_compile_strict_and_reflect():
    e = P("q^1.5")
    strict = compile_expr(e, ["q"])
    assert strict([4.0]) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        strict([-4.0])
    reflect = compile_expr(e, ["q"], BranchRule.REFLECT)
    # ceil(1.5) = 2, so the sign is (-1)^3
    assert reflect([-4.0]) == pytest.approx(-8.0)
    with pytest.raises(SingularValueError):
        compile_expr(P("q^-0.5"), ["q"])([0.0])
    with pytest.raises(MissingVariableError):
        compile_expr(e, ["p"])


def test_expr_equal_missing_terms_are_zero():
    a = P("q + 1e-14*p")
    assert expr_equal(a, P("q"), 1e-12)
    assert not expr_equal(a, P("q"), 0.0)


# property tests

names = st.sampled_from(["q", "p", "v"])
exps = st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 2.7])
coeffs = st.floats(min_value=-5, max_value=5, allow_nan=False).filter(lambda c: abs(c) > 1e-3)


@st.composite
def exprs(draw):
    terms = []
    for _ in range(draw(st.integers(0, 4))):
        powers = {draw(names): draw(exps) for _ in range(draw(st.integers(0, 2)))}
        terms.append(Monomial(draw(coeffs), tuple(sorted(powers.items()))))
    return canonicalize(terms)


@given(exprs())
def test_text_round_trip(e):
    back = parse_expr(e.to_text(), Q)
    assert expr_equal(back, e, 1e-15)


@given(exprs(), exprs())
def test_addition_commutes(a, b):
    assert a + b == b + a


@given(exprs(), exprs(), st.floats(min_value=-3, max_value=3))
def test_frac_partial_linear(a, b, c):
    lhs = frac_partial(a.scale(c) + b, "q", 0.5)
    rhs = frac_partial(a, "q", 0.5).scale(c) + frac_partial(b, "q", 0.5)
    assert expr_equal(lhs, rhs, 1e-12)


@given(exprs(), st.floats(min_value=0.1, max_value=3), st.floats(min_value=0.1, max_value=3),
       st.floats(min_value=0.1, max_value=3))
def test_compile_matches_evaluate(e, q, p, v):
    point = {"q": q, "p": p, "v": v}
    assert compile_expr(e, Q)([q, p, v]) == pytest.approx(evaluate(e, point), rel=1e-12, abs=1e-12)


@given(exprs())
def test_partial_product_rule(e):
    f = P("q^2 + p")
    lhs = partial(e * f, "q")
    rhs = partial(e, "q") * f + e * partial(f, "q")
    assert expr_equal(lhs, rhs, 1e-12)
