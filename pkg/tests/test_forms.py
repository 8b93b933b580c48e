import pytest
from hypothesis import given, strategies as st

from fracvar.errors import GradeError
from fracvar.expr import DerivKind, Monomial, PowerExpr, canonicalize, expr_equal, frac_partial, parse_expr
from fracvar.forms import (
    Chart,
    FracForm,
    build_beta_form,
    build_extended_pc,
    build_poincare_cartan,
    build_theta,
    contract,
    exactness_check,
    frac_exterior_derivative,
    is_closed,
    wedge,
)
from fracvar.specialfn import gamma

TQP = ["t", "q", "p"]


def P(text, chart=TQP):
    return parse_expr(text, chart)


def test_chart_validation():
    with pytest.raises(ValueError):
        Chart([])
    with pytest.raises(ValueError):
        Chart(["q", "q"])
    with pytest.raises(ValueError):
        Chart(["q", "p"], [0.5])
    c = Chart(["q", "p"], [0.5, 0.7])
    assert c.order("p") == 0.7
    with pytest.raises(ValueError):
        c.alpha


def test_two_form_antisymmetry():
    c = Chart(TQP, 0.5)
    f = FracForm.from_terms(c, 2, [(("p", "q"), P("q"))])
    assert f.coeff("q", "p").to_text() == "-q"
    assert f.coeff("p", "q").to_text() == "q"
    assert FracForm.from_terms(c, 2, [(("q", "q"), P("1"))]).is_zero()


def test_printing():
    c = Chart(TQP, 0.5)
    f = FracForm.from_terms(c, 1, [("q", P("p")), ("t", P("-p^2/2 - q^2/2"))])
    assert f.to_text() == "-(0.5*p^2 + 0.5*q^2)*(dt)^0.5 + p*(dq)^0.5"
    g = FracForm.from_terms(Chart(TQP), 2, [(("q", "p"), P("-1"))])
    assert g.to_text() == "-dq∧dp"


def test_exterior_derivative_classical_pc():
    H = P("p^2/2 + q^2/2")
    d = frac_exterior_derivative(build_poincare_cartan(H, 1.0))
    assert d.coeff("t", "q").to_text() == "q"
    assert d.coeff("t", "p").to_text() == "p"
    assert d.coeff("q", "p").to_text() == "-1"


def test_exterior_derivative_fractional_pc_coefficients():
    alpha = 0.5
    H = P("p^2/2 + q^2/2")
    d = frac_exterior_derivative(build_poincare_cartan(H, alpha))
    expected_qp = PowerExpr.var("p", 1 - alpha, -1 / gamma(2 - alpha))
    assert expr_equal(d.coeff("q", "p"), expected_qp, 1e-12)
    assert expr_equal(d.coeff("t", "p"), frac_partial(H, "p", alpha), 1e-12)
    assert expr_equal(d.coeff("t", "q"), frac_partial(H, "q", alpha), 1e-12)


def test_grade_two_derivative_unsupported():
    c = Chart(TQP)
    with pytest.raises(GradeError):
        frac_exterior_derivative(FracForm.zero(c, 2))
    with pytest.raises(GradeError):
        FracForm.from_terms(c, 3, [])


def test_wedge_is_antisymmetric():
    c = Chart(TQP, 0.7)
    a = FracForm.from_terms(c, 1, [("q", P("p"))])
    b = FracForm.from_terms(c, 1, [("p", P("q")), ("t", P("1"))])
    assert wedge(a, b).equals(-wedge(b, a))
    assert wedge(a, a).is_zero()
    with pytest.raises(GradeError):
        wedge(wedge(a, b), a)


def test_contract():
    c = Chart(["q", "p"])
    omega = FracForm.from_terms(c, 2, [(("q", "p"), P("1", ["q", "p"]))])
    # i_X (dq^dp) = X^q dp - X^p dq
    out = contract(omega, {"q": P("p", ["q", "p"]), "p": P("-q", ["q", "p"])})
    assert out.coeff("p").to_text() == "p"
    assert out.coeff("q").to_text() == "q"
    one = FracForm.from_terms(c, 1, [("q", P("2", ["q", "p"]))])
    assert contract(one, {"q": 3.0}).coeff().to_text() == "6"


def test_closed_and_exact():
    c = Chart(["q", "p"], 0.5)
    V = FracForm.function(c, P("q^2*p^1.5", ["q", "p"]))
    assert is_closed(frac_exterior_derivative(V))
    assert exactness_check([P("p", ["q", "p"]), P("q", ["q", "p"])], Chart(["q", "p"]))
    assert not exactness_check([P("p", ["q", "p"]), P("-q", ["q", "p"])], Chart(["q", "p"]))


def test_beta_form_and_theta():
    G = [P("p")]
    F = [P("-q - 0.1*p")]
    beta = build_beta_form(G, F, 1.0)
    assert beta.coeff("p").to_text() == "p"
    assert beta.coeff("q").to_text() == "0.1*p + q"
    # friction makes the beta form non-closed
    assert not is_closed(beta)
    theta = build_theta(G, F, 0.5)
    assert theta.coeff("t", "q").to_text() == "-0.1*p - q"
    assert theta.coeff("t", "p").to_text() == "-p"
    with pytest.raises(ValueError):
        build_theta(G, [], 0.5)


def test_extended_pc():
    L = parse_expr("v^2/2 - q^2/2", ["t", "q", "p", "v"])
    w = build_extended_pc(L, 1.0)
    assert w.coeff("q").to_text() == "p"
    assert w.coeff("t").to_text() == "-p*v - 0.5*q^2 + 0.5*v^2"


# d(d V) = 0 on random monomials

@st.composite
def monomials(draw):
    powers = tuple((n, draw(st.sampled_from([0.0, 1.0, 2.0, 0.5, 1.5, 2.5, 3.0])))
                   for n in ("x", "y", "z"))
    return canonicalize([Monomial(draw(st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3)), powers)])


@given(monomials(), st.sampled_from([0.3, 0.5, 0.9]),
       st.sampled_from([DerivKind.CAPUTO, DerivKind.RIEMANN_LIOUVILLE]))
def test_poincare_lemma(V, alpha, kind):
    c = Chart(["x", "y", "z"], alpha)
    dd = frac_exterior_derivative(frac_exterior_derivative(FracForm.function(c, V), kind), kind)
    assert dd.is_zero(1e-12)
