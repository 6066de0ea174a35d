from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifoldreg.manifold_gen import ManifoldSpec, SampleSet, sample_uniform
from manifoldreg.moments import (
    MomentTable,
    analytic_moment_uniform,
    assemble_normal_system,
    default_quadrature_order,
    empirical_moments,
    gauss_legendre_grid,
    hypersurface_moment_table,
    quadrature_moments,
)
from manifoldreg.polynomial import TargetFunction
from manifoldreg.regression import diagnose_degeneracy

from oracles import uniform_moment


def test_analytic_moments():
    L = 0.3
    assert analytic_moment_uniform([2], L) == pytest.approx(L**2 / 3, rel=1e-15)
    assert analytic_moment_uniform([4], L) == pytest.approx(L**4 / 5, rel=1e-15)
    assert analytic_moment_uniform([1, 2], L) == 0.0
    assert analytic_moment_uniform([2, 2], L) == pytest.approx(L**4 / 9, rel=1e-15)
    assert analytic_moment_uniform([0, 0], L) == 1.0
    with pytest.raises(ValueError):
        analytic_moment_uniform([-1], L)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=4), st.floats(0.01, 2.0))
def test_analytic_matches_fractions(p, L):
    ref = 1
    for pi in p:
        ref *= uniform_moment(pi, L)
    assert analytic_moment_uniform(p, L) == pytest.approx(float(ref), rel=1e-14, abs=0)


def test_hypersurface_table_unit_curvature():
    t = hypersurface_moment_table([1.0], 1.0)
    assert t.determinant_D == pytest.approx(4 / 45, rel=1e-15)
    assert t.mean_y == pytest.approx(1 / 3)
    assert hypersurface_moment_table([0.0, 0.0], 0.7).determinant_D == 0.0


def _table_from_uniform_moments(k, L):
    """<y>, <y^2>, <x_j^2 y> assembled from single-variable moments."""
    k = np.asarray(k, dtype=float)
    m2, m4 = analytic_moment_uniform([2], L), analytic_moment_uniform([4], L)
    mean_y = m2 * k.sum()
    y2 = sum(k[i] * k[j] * (m4 if i == j else m2 * m2)
             for i in range(k.size) for j in range(k.size))
    xj2y = np.array([sum(k[i] * (m4 if i == j else m2 * m2) for i in range(k.size))
                     for j in range(k.size)])
    return mean_y, y2, xj2y


def test_hypersurface_table_two_ways():
    k, L = [1.0, 2.0], 0.5
    t = hypersurface_moment_table(k, L)
    mean_y, y2, xj2y = _table_from_uniform_moments(k, L)
    assert t.determinant_D == pytest.approx(y2 - mean_y**2, rel=1e-14)
    assert t.y_squared == pytest.approx(y2, rel=1e-14)
    np.testing.assert_allclose(t.xj2_y, xj2y, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(0.01, 1.0))
def test_determinant_identity(k, L):
    t = hypersurface_moment_table(k, L)
    D = sum(v * v for v in k) * 4 * L**4 / 45
    assert t.determinant_D == pytest.approx(D, rel=1e-13, abs=1e-300)
    diff = t.y_squared - t.mean_y**2
    assert diff == pytest.approx(t.determinant_D, rel=1e-10, abs=1e-14 * t.y_squared)


def test_quadrature_curve2d_second_moment():
    g = TargetFunction.constant(1.0, 2)
    for order in (3, 4, 7):
        tab = quadrature_moments(ManifoldSpec.curve2d(0.4), g, 0.2, order=order)
        assert tab.second_moments[0, 0] == pytest.approx(0.2**2 / 3, rel=1e-14)
        assert tab.rhs_g == pytest.approx(1.0, abs=1e-15)
        assert tab.provenance == f"Quadrature({order})"


def test_quadrature_matches_hypersurface_table():
    k, L = [1.0, 2.0, 3.0], 0.2
    tab = quadrature_moments(ManifoldSpec.hypersurface(k), TargetFunction.constant(1.0, 4), L,
                             order=6)
    ref = hypersurface_moment_table(k, L)
    assert tab.second_moments[3, 3] == pytest.approx(ref.y_squared, rel=1e-13)
    assert tab.first_moments[3] == pytest.approx(ref.mean_y, rel=1e-13)


def test_quadrature_equals_exact_polynomial_moments():
    # every entry is a polynomial integral; compare with exact fractions
    ks, L = [0.5, -1.25], 0.3
    spec = ManifoldSpec.space_curve(ks)
    g = TargetFunction.from_expression("1 + x_1*x_2 + x_3^2", ["x_1", "x_2", "x_3"])
    tab = quadrature_moments(spec, g, L)
    k = [1.0] + ks
    for i in range(3):
        for j in range(3):
            exact = Fraction(k[i]) * Fraction(k[j]) * uniform_moment(i + j + 2, L)
            scale = np.sqrt(tab.second_moments[i, i] * tab.second_moments[j, j])
            assert tab.second_moments[i, j] == pytest.approx(float(exact), rel=1e-13,
                                                             abs=1e-15 * scale)
    # <g x_1> = <x_1> + k_2 <x^4> + k_3^2 <x^7>  (only the even power survives)
    exact = Fraction(ks[0]) * uniform_moment(4, L)
    assert tab.rhs_gx[0] == pytest.approx(float(exact), rel=1e-13)


def test_default_order_is_exact():
    spec = ManifoldSpec.space_curve([1.0, 1.0, 1.0])
    g = TargetFunction.random(4, 3, np.random.default_rng(0))
    o = default_quadrature_order(spec, g)
    a = quadrature_moments(spec, g, 0.5, order=o)
    b = quadrature_moments(spec, g, 0.5, order=o + 5)
    d = np.sqrt(np.diag(b.second_moments))
    np.testing.assert_allclose(a.second_moments / np.outer(d, d),
                               b.second_moments / np.outer(d, d), rtol=1e-13, atol=1e-15)
    gs = np.sqrt(b.g_squared)
    np.testing.assert_allclose(a.rhs_gx / d, b.rhs_gx / d, rtol=1e-12, atol=1e-15 * gs)
    assert a.g_squared == pytest.approx(b.g_squared, rel=1e-13)


def test_quadrature_budget_and_order():
    with pytest.raises(ValueError):
        gauss_legendre_grid(8, 0.1, 10, budget=1000)
    spec = ManifoldSpec.curve2d(0.1)
    with pytest.raises(ValueError):
        quadrature_moments(spec, TargetFunction.constant(1.0, 2), 0.1, order=1)
    with pytest.raises(ValueError):
        quadrature_moments(spec, TargetFunction.constant(1.0, 3), 0.1)
    T, W = gauss_legendre_grid(2, 0.5, 4)
    assert T.shape == (16, 2) and W.sum() == pytest.approx(1.0, abs=1e-15)


def test_empirical_single_sample():
    s = SampleSet([[0.2, -0.5, 3.0]], 1, 1.0, 0)
    tab = empirical_moments(s, [2.0])
    p = np.array([0.2, -0.5, 3.0])
    np.testing.assert_array_equal(tab.second_moments, np.outer(p, p))
    np.testing.assert_array_equal(tab.first_moments, p)
    np.testing.assert_array_equal(tab.rhs_gx, 2.0 * p)
    assert tab.rhs_g == 2.0 and tab.provenance == "Empirical(1)"


def test_empirical_duplicate_invariance():
    s = sample_uniform(ManifoldSpec.hypersurface([1.0, 2.0]), 0.1, 64, seed=1)
    g = s.points @ [1.0, 2.0, 3.0]
    a = empirical_moments(s, g)
    b = empirical_moments(np.vstack([s.points, s.points]), np.concatenate([g, g]))
    np.testing.assert_allclose(a.second_moments, b.second_moments, rtol=1e-14)
    np.testing.assert_allclose(a.rhs_gx, b.rhs_gx, rtol=1e-14)


def test_empirical_errors():
    with pytest.raises(ValueError):
        empirical_moments(np.zeros((3, 2)), [1.0, 2.0])
    with pytest.raises(ValueError):
        empirical_moments(np.zeros((0, 2)), [])


def test_empirical_second_moment_large_n():
    N, L = 1_000_000, 0.1
    s = sample_uniform(ManifoldSpec.curve2d(0.1), L, N, seed=5)
    tab = empirical_moments(s, np.ones(N))
    x2 = s.points[:, 0] ** 2
    assert abs(tab.second_moments[0, 0] - L**2 / 3) < 3 * x2.std() / np.sqrt(N)


def test_empirical_converges_at_root_n():
    spec = ManifoldSpec.curve2d(0.1)
    g = TargetFunction.from_expression("2*x^2 + 2*y^2 + 6*x*y + 3*x + 4*y + 10", ("x", "y"))
    ref = quadrature_moments(spec, g, 0.1)
    Ns, rms = [1_000, 10_000, 100_000], []
    for N in Ns:
        dev = []
        for seed in range(20):
            s = sample_uniform(spec, 0.1, N, seed)
            t = empirical_moments(s, g(s.points))
            dev.append(t.rhs_gx[0] - ref.rhs_gx[0])
        rms.append(np.sqrt(np.mean(np.square(dev))))
    slope = np.polyfit(np.log(Ns), np.log(rms), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)


def test_assemble_curve2d_system():
    spec = ManifoldSpec.curve2d(0.1)
    g = TargetFunction.from_expression("2*x^2 + 2*y^2 + 6*x*y + 3*x + 4*y + 10", ("x", "y"))
    sysm = assemble_normal_system(quadrature_moments(spec, g, 0.1))
    A = sysm.matrix_A
    assert A[2, 2] == 1.0
    np.testing.assert_array_equal(A, A.T)
    # <xy> = <x> = 0 up to rounding
    assert abs(A[0, 1]) < 1e-15 * np.sqrt(A[0, 0] * A[1, 1])
    assert abs(A[0, 2]) < 1e-15 * np.sqrt(A[0, 0])
    assert sysm.coordinate_labels == ("x_1", "y_1", "bias")


def test_assemble_flat_codim2():
    spec = ManifoldSpec.codim_k([np.diag([1.0, 2.0]), np.zeros((2, 2))])
    g = TargetFunction.linear([1.0, 1.0, 1.0, 1.0], 1.0)
    A = assemble_normal_system(quadrature_moments(spec, g, 0.1)).matrix_A
    assert A.shape == (5, 5)
    np.testing.assert_array_equal(A[3], 0.0)
    np.testing.assert_array_equal(A[:, 3], 0.0)


def test_assemble_bias_only():
    tab = MomentTable(np.zeros((3, 3)), np.zeros(3), np.zeros(3), 2.0, "Analytic")
    sysm = assemble_normal_system(tab)
    expected = np.zeros((4, 4))
    expected[3, 3] = 1.0
    np.testing.assert_array_equal(sysm.matrix_A, expected)
    rep = diagnose_degeneracy(sysm)
    assert rep.rank == 1 and rep.flat_coordinates == (0, 1, 2)


def test_moment_table_validation():
    with pytest.raises(ValueError):
        MomentTable(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), np.zeros(2), 0.0, "Analytic")


def test_normal_system_csv(tmp_path):
    spec = ManifoldSpec.curve2d(0.5)
    sysm = assemble_normal_system(quadrature_moments(spec, TargetFunction.constant(1.0, 2), 0.1))
    p = tmp_path / "A.csv"
    sysm.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "row,x_1,y_1,bias,rhs"
    assert lines[3].startswith("bias,")
