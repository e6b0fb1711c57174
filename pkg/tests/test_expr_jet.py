import math

import numpy as np
import pytest

from frontlab import jet as J
from frontlab.errors import DomainError, ExprSyntaxError, UnknownIdentifier
from frontlab.expr import BinOp, Expression, Sym, eval_jet, evaluate, parse, to_string


def coeffs(e, point, order):
    j = eval_jet(e, point, order)
    return {(i, k): float(j[i, k]) for i in range(order + 1) for k in range(order + 1 - i)}


def test_parse_symbol():
    assert parse("u") == Sym("u")


def test_parse_precedence():
    t = parse("3*u^4 + u^2*v")
    assert isinstance(t, BinOp) and t.op == "+"
    # ^ is right associative and binds tighter than unary minus
    assert evaluate("2^3^2", 0.0, 0.0) == 2.0**9
    assert evaluate("-2^2", 0.0, 0.0) == -4.0


@pytest.mark.parametrize("text", ["3*u^4 + u^2*v", "2*u^3 - u*v^2", "sqrt(1+u^2)/(2-cos(v))",
                                  "-u^-2", "exp(-(u-1)^2)*atan(v)", "pi*abs(u)+log(3+v)"])
def test_round_trip(text):
    t = parse(text)
    assert parse(to_string(t)) == t


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse("u^2 +* v")
    assert err.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as err:
        parse("u + w")
    assert err.value.name == "w"


def test_u2v_coefficients():
    c = coeffs("u^2*v", (1.0, 2.0), 2)
    assert c == {(0, 0): 2.0, (1, 0): 4.0, (0, 1): 1.0, (2, 0): 2.0, (1, 1): 2.0, (0, 2): 0.0}


def test_variable_jet():
    assert coeffs("u", (0.0, 0.0), 1) == {(0, 0): 0.0, (1, 0): 1.0, (0, 1): 0.0}


def test_sqrt_series():
    j = eval_jet("sqrt(1+u^2)", (0.0, 0.0), 2)
    assert j.partial(0, 0) == 1.0 and j.partial(1, 0) == 0.0 and j.partial(2, 0) == pytest.approx(1.0, abs=1e-15)


def _taylor_of_poly(c, a, b):
    """Taylor coefficients at (a, b) of sum c[i, j] u^i v^j by binomial expansion."""
    out = {}
    for (i, j), cij in c.items():
        for p in range(i + 1):
            for q in range(j + 1):
                out[(p, q)] = out.get((p, q), 0.0) + cij * math.comb(i, p) * math.comb(j, q) * a ** (i - p) * b ** (j - q)
    return out


def test_cubic_polynomials_exact():
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = {(i, j): float(rng.integers(-5, 6)) for i in range(4) for j in range(4 - i)}
        text = " + ".join("(%g)*u^%d*v^%d" % (cij, i, j) for (i, j), cij in c.items())
        a, b = (float(x) for x in rng.integers(-3, 4, 2))
        got = coeffs(text, (a, b), 3)
        want = _taylor_of_poly(c, a, b)
        for k, val in got.items():
            assert val == pytest.approx(want.get(k, 0.0), abs=1e-12)


def test_leibniz_product():
    f, g = Expression("sin(u)*v+u^2"), Expression("exp(v-u)")
    p = (0.3, -0.7)
    fg = eval_jet(Expression("(sin(u)*v+u^2)*exp(v-u)"), p, 3)
    prod = f.jet(*p, 3) * g.jet(*p, 3)
    assert np.allclose(fg.coef, prod.coef, rtol=0, atol=1e-14)


def test_truncation_consistency():
    e = Expression("atan(u*v)+sqrt(2+sin(u))")
    j3 = e.jet(0.4, 0.1, 3)
    j1 = e.jet(0.4, 0.1, 1)
    assert np.array_equal(j3.truncate(1).coef, j1.coef)


def test_determinism():
    e = Expression("exp(u)*cos(v)^3/(1+u^2)")
    assert np.array_equal(e.jet(0.2, 0.3, 3).coef, Expression(e.text).jet(0.2, 0.3, 3).coef)


@pytest.mark.parametrize("text,point", [("log(u)", (0.0, 1.0)), ("sqrt(u)", (-1.0, 0.0)),
                                        ("1/u", (0.0, 0.0)), ("abs(u)", (0.0, 0.0))])
def test_domain_errors(text, point):
    with pytest.raises(DomainError):
        eval_jet(text, point, 1)


def test_batch_matches_pointwise():
    e = Expression("u^3*sin(v)+exp(u*v)")
    us, vs = np.array([0.1, -0.4, 0.9]), np.array([0.5, 0.2, -0.3])
    batch = e.jet(us, vs, 2)
    for k in range(3):
        assert np.allclose(batch.coef[k], e.jet(us[k], vs[k], 2).coef, atol=0, rtol=1e-15)


def test_jet_functions_against_math():
    x = J.Jet2.variable(0.3, 0, 2)
    for f, df, d2f in [(J.sin, math.cos, lambda t: -math.sin(t)), (J.exp, math.exp, math.exp),
                       (J.atan, lambda t: 1 / (1 + t * t), lambda t: -2 * t / (1 + t * t) ** 2)]:
        j = f(x)
        assert j.partial(1, 0) == pytest.approx(df(0.3), rel=1e-14)
        assert j.partial(2, 0) == pytest.approx(d2f(0.3), rel=1e-13)
