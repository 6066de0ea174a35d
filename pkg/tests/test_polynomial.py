import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifoldreg.polynomial import TargetFunction, monomials
from manifoldreg.theory import partial_derivative

from oracles import naive_eval

BENCH_G = "2*x^2 + 2*y^2 + 6*x*y + 3*x + 4*y + 10"


@pytest.fixture
def g2():
    return TargetFunction.from_expression(BENCH_G, ("x", "y"))


def test_parse_terms(g2):
    assert g2.terms == {(0, 0): 10.0, (0, 1): 4.0, (0, 2): 2.0, (1, 0): 3.0,
                        (1, 1): 6.0, (2, 0): 2.0}
    assert g2.degree == 2
    assert g2.value_at_origin() == 10.0


def test_partial_y_at_origin(g2):
    assert partial_derivative(g2, (0, 1)).value_at_origin() == 4.0


def test_second_partial_is_constant(g2):
    gxx = partial_derivative(g2, (2, 0))
    assert gxx.terms == {(0, 0): 4.0}


def test_partial_of_constant_is_zero():
    c = TargetFunction.constant(3.5, 2)
    assert partial_derivative(c, (1, 0)).terms == {}
    assert partial_derivative(c, (0, 1))(np.ones((3, 2))).tolist() == [0.0, 0.0, 0.0]


def test_gradient_and_hessian(g2):
    assert g2.gradient_at_origin().tolist() == [3.0, 4.0]
    assert g2.hessian_at_origin().tolist() == [[4.0, 6.0], [6.0, 4.0]]


def test_partial_at_origin_matches_derivative_polynomial():
    g = TargetFunction.from_expression("x^3*y^2 + 5*x*y - 7", ("x", "y"))
    assert g.partial_at_origin((3, 2)) == 12.0
    assert g.partial((3, 2)).value_at_origin() == 12.0
    assert g.partial_at_origin((1, 1)) == 5.0


def test_linear_constructor():
    g = TargetFunction.linear([1.0, -2.0, 0.5], b=3.0)
    assert g.gradient_at_origin().tolist() == [1.0, -2.0, 0.5]
    assert g(np.array([[1.0, 1.0, 2.0]]))[0] == pytest.approx(3.0)


def test_arithmetic():
    a = TargetFunction.from_expression("x + y", ("x", "y"))
    b = TargetFunction.from_expression("x - y", ("x", "y"))
    assert (a + b) == 2 * TargetFunction.from_expression("x", ("x", "y"))
    assert (a + 1.0).value_at_origin() == 1.0


def test_wrong_width_rejected(g2):
    with pytest.raises(ValueError):
        g2(np.zeros((2, 3)))


def test_monomial_count():
    # C(d + p, p)
    assert len(list(monomials(3, 4))) == 35
    assert len(set(monomials(2, 3))) == 10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_evaluation_matches_naive_loop(dim, degree, seed):
    rng = np.random.default_rng(seed)
    g = TargetFunction.random(dim, degree, rng)
    P = rng.uniform(-1.5, 1.5, size=(5, dim))
    ref = [naive_eval(g.terms, p) for p in P]
    np.testing.assert_allclose(g(P), ref, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_partial_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    g = TargetFunction.random(2, 3, rng)
    p = rng.uniform(-1, 1, size=2)
    h = 1e-5
    fd = (g(p + [h, 0]) - g(p - [h, 0]))[0] / (2 * h)
    assert g.partial((1, 0))(p)[0] == pytest.approx(fd, rel=1e-6, abs=1e-6)
