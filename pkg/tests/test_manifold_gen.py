import numpy as np
import pytest

from manifoldreg.manifold_gen import (
    ManifoldSpec,
    NoiseSpec,
    SampleSet,
    add_noise,
    bend_dataset,
    embed_codim_k,
    embed_curve2d,
    embed_hypersurface,
    embed_space_curve,
    sample_uniform,
)


def test_embed_curve2d():
    assert embed_curve2d(0.5, 2).tolist() == [0.5, 0.5]
    assert embed_curve2d(0.0, 3.7).tolist() == [0.0, 0.0]
    np.testing.assert_allclose(embed_curve2d(0.1, 0.1), [0.1, 0.001], rtol=1e-15)


def test_embed_hypersurface():
    assert embed_hypersurface([1, 1], [2, 3]).tolist() == [1, 1, 5]
    assert embed_hypersurface([0.3, -2.0], [0, 0]).tolist() == [0.3, -2.0, 0.0]
    np.testing.assert_allclose(embed_hypersurface([0.1, -0.1], [1, 1]), [0.1, -0.1, 0.02],
                               rtol=1e-15)
    with pytest.raises(ValueError):
        embed_hypersurface([1, 2], [1, 2, 3])


def test_embed_space_curve():
    assert embed_space_curve(2, [1, 1]).tolist() == [2, 4, 8]
    np.testing.assert_allclose(embed_space_curve(0.1, [0.5, 1 / 60]),
                               [0.1, 0.005, 1e-3 / 60], rtol=1e-15)
    assert embed_space_curve(0.7, [0, 0, 0]).tolist() == [0.7, 0, 0, 0]


def test_embed_codim_k():
    cross = [[0, 0.5], [0.5, 0]]
    assert embed_codim_k([1, 1], [np.diag([1, 2]), np.zeros((2, 2))]).tolist() == [1, 1, 3, 0]
    assert embed_codim_k([1, 0], [cross]).tolist() == [1, 0, 0]
    assert embed_codim_k([1, 1], [cross]).tolist() == [1, 1, 1]
    with pytest.raises(ValueError):
        embed_codim_k([1, 1], [np.eye(3)])


def test_spec_invariants():
    with pytest.raises(ValueError):
        ManifoldSpec("Curve2D", 2, 3, curvatures=[1.0])
    with pytest.raises(ValueError):
        ManifoldSpec.codim_k([np.eye(2), np.eye(2)], flat_flags=(False, True))
    spec = ManifoldSpec.codim_k([np.diag([1.0, 2.0]), np.zeros((2, 2))])
    assert spec.flat_flags == (False, True)
    assert spec.ambient_dim == spec.tangent_dim + spec.codim == 4


def test_spec_dict_round_trip():
    for spec in (ManifoldSpec.curve2d(0.3), ManifoldSpec.hypersurface([1, -2]),
                 ManifoldSpec.space_curve([0.5, 0.1, 2.0]),
                 ManifoldSpec.codim_k([[[1, 0.5], [0.5, 2]], np.zeros((2, 2))])):
        back = ManifoldSpec.from_dict(spec.to_dict())
        assert back.to_dict() == spec.to_dict()


def test_sample_uniform_curve2d():
    s = sample_uniform(ManifoldSpec.curve2d(0.1), 0.1, 1000, seed=7)
    assert s.points.shape == (1000, 2)
    assert np.all(np.abs(s.points[:, 0]) <= 0.1)
    np.testing.assert_allclose(s.points[:, 1], 0.1 * s.points[:, 0] ** 2, rtol=1e-15)


def test_sample_uniform_is_deterministic():
    spec = ManifoldSpec.hypersurface([1.0, -0.5])
    a = sample_uniform(spec, 0.3, 50, seed=11)
    b = sample_uniform(spec, 0.3, 50, seed=11)
    c = sample_uniform(spec, 0.3, 50, seed=12)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_sample_uniform_hypersurface_consistency():
    k = np.array([1.0, 2.0, 3.0])
    s = sample_uniform(ManifoldSpec.hypersurface(k), 0.05, 10, seed=1)
    y = (s.tangent**2) @ k
    np.testing.assert_allclose(s.normal[:, 0], y, rtol=1e-15, atol=1e-15)


def test_sample_uniform_rejects_bad_arguments():
    spec = ManifoldSpec.curve2d(1.0)
    with pytest.raises(ValueError):
        sample_uniform(spec, 0.0, 10, 1)
    with pytest.raises(ValueError):
        sample_uniform(spec, 0.1, 0, 1)


def test_adding_a_coordinate_keeps_existing_streams():
    # per-coordinate streams: the first tangent column does not depend on t
    a = sample_uniform(ManifoldSpec.hypersurface([1.0]), 0.2, 20, seed=5)
    b = sample_uniform(ManifoldSpec.hypersurface([1.0, 1.0]), 0.2, 20, seed=5)
    np.testing.assert_array_equal(a.points[:, 0], b.points[:, 0])


def test_zero_noise_is_identity():
    s = sample_uniform(ManifoldSpec.curve2d(0.1), 0.1, 100, seed=3)
    np.testing.assert_array_equal(add_noise(s, NoiseSpec((0.0,), 9)).points, s.points)


def test_selective_noise():
    spec = ManifoldSpec.codim_k([np.diag([1.0, 2.0]), np.zeros((2, 2))])
    s = sample_uniform(spec, 0.1, 200, seed=3)
    n = add_noise(s, NoiseSpec((0.0, 1e-3), 4))
    np.testing.assert_array_equal(n.points[:, :3], s.points[:, :3])
    assert np.all(n.points[:, 3] != 0.0)
    with pytest.raises(ValueError):
        add_noise(s, NoiseSpec((1e-3,), 4))
    with pytest.raises(ValueError):
        NoiseSpec((-1.0,), 0)


def test_noise_variance():
    s = sample_uniform(ManifoldSpec.curve2d(0.1), 0.1, 100_000, seed=3)
    n = add_noise(s, NoiseSpec((1e-3,), 8))
    resid = n.points[:, 1] - 0.1 * n.points[:, 0] ** 2
    assert resid.var() == pytest.approx(1e-6, rel=0.1)
    assert abs(resid.mean()) < 3 * 1e-3 / np.sqrt(1e5)


def test_symmetry_of_clean_moments():
    # <x> and <x y> vanish; tolerance 3 standard errors at N = 10^6
    N, L, kappa = 1_000_000, 0.1, 0.1
    s = sample_uniform(ManifoldSpec.curve2d(kappa), L, N, seed=21)
    x, y = s.points.T
    assert abs(x.mean()) < 3 * x.std() / np.sqrt(N)
    assert abs((x * y).mean()) < 3 * (x * y).std() / np.sqrt(N)
    h = sample_uniform(ManifoldSpec.hypersurface([1.0, 2.0]), L, N, seed=22)
    x1, x2 = h.tangent.T
    assert abs((x1 * x2).mean()) < 3 * (x1 * x2).std() / np.sqrt(N)


def _flat_cloud(seed=0, n=40, d=6, r=3):
    rng = np.random.default_rng(seed)
    X = np.zeros((n, d))
    X[:, :r] = rng.standard_normal((n, r))
    Q = np.eye(d)[:, r:]
    return X, Q


def test_bend_zero_alpha_is_identity():
    X, Q = _flat_cloud()
    np.testing.assert_array_equal(bend_dataset(X, Q, 0.0, seed=1), X)


def test_bend_is_linear_in_alpha():
    X, Q = _flat_cloud()
    d1 = bend_dataset(X, Q, 1e-3, seed=1) - X
    d2 = bend_dataset(X, Q, 2e-3, seed=1) - X
    np.testing.assert_allclose(d2, 2 * d1, rtol=1e-12, atol=0)
    # displacement stays in the normal span
    np.testing.assert_allclose(d1[:, :3], 0.0, atol=0)


def test_bend_accepts_sample_sets():
    X, Q = _flat_cloud()
    s = SampleSet(X, 3, 1.0, 0)
    out = bend_dataset(s, Q, 0.5, seed=2)
    assert isinstance(out, SampleSet)
    np.testing.assert_array_equal(out.points, bend_dataset(X, Q, 0.5, seed=2))


def test_bend_rejects_bad_basis():
    X, Q = _flat_cloud()
    with pytest.raises(ValueError):
        bend_dataset(X, 2 * Q, 1.0, seed=1)  # not orthonormal
    with pytest.raises(ValueError):
        bend_dataset(X, np.eye(6)[:, :3], 1.0, seed=1)  # inside the data span


def test_bend_restores_full_rank():
    # rank-r data in R^d (dense coordinates), bent along all d - r normals
    rng = np.random.default_rng(4)
    n, d, r = 300, 40, 25
    B = np.linalg.qr(rng.standard_normal((d, d)))[0]
    X = rng.standard_normal((n, r)) @ B[:, :r].T
    Xb = bend_dataset(X, B[:, r:], 1e-8, seed=3)
    s = np.linalg.svd(Xb - Xb.mean(axis=0), compute_uv=False)
    assert np.linalg.matrix_rank(X - X.mean(axis=0)) == r
    assert np.sum(s > 1e-14 * s[0]) == d


def test_sample_set_csv(tmp_path):
    s = sample_uniform(ManifoldSpec.codim_k([np.eye(2), np.zeros((2, 2))]), 0.1, 3, seed=1)
    p = tmp_path / "s.csv"
    s.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x_1,x_2,y_1,y_2"
    assert np.allclose(np.loadtxt(p, delimiter=",", skiprows=1), s.points, rtol=0, atol=0)
