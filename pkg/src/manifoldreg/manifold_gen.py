"""Local manifold specifications and deterministic sample generation.

Every manifold is described in its local frame: the base point sits at the
origin, the first ``tangent_dim`` coordinates span the tangent space and the
remaining coordinates are normal directions written as graphs over the
tangent coordinates.

Curvature conventions
---------------------
* ``Curve2D`` is the graph ``y = kappa * x**2``.
* ``Hypersurface`` is ``y = sum_i kappa_i * x_i**2``.  A graph written as
  ``y = 0.5 * x^T K x`` has Hessian eigenvalues ``K_ii``, so
  ``kappa_i = K_ii / 2`` in this convention (see :func:`kappa_from_hessian`).
* ``SpaceCurve`` is ``(x, k_2 x**2, ..., k_d x**d)`` with nonlinear quantities
  ``k_n``; for a curve in R^3, ``k_2 = curvature / 2`` and
  ``k_3 = curvature * torsion / 6``.
* ``CodimK`` normal coordinate ``j`` is the quadratic form ``x^T F_j x``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _rng

KINDS = ("Curve2D", "Hypersurface", "SpaceCurve", "CodimK")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

def embed_curve2d(x, kappa):
    """Point(s) ``(x, kappa x^2)`` on the planar model curve."""
    x = np.asarray(x, dtype=float)
    return np.stack([x, kappa * x * x], axis=-1)


def embed_hypersurface(xp, curvatures):
    """Point(s) ``(x', sum_i kappa_i x_i^2)``; ``xp`` has shape (..., d-1)."""
    xp = np.asarray(xp, dtype=float)
    kappa = np.asarray(curvatures, dtype=float)
    if xp.shape[-1] != kappa.size:
        raise ValueError(
            f"tangent vector has length {xp.shape[-1]}, got {kappa.size} curvatures"
        )
    y = (xp * xp) @ kappa
    return np.concatenate([xp, y[..., None]], axis=-1)


def embed_space_curve(x, ks):
    """Point(s) ``(x, k_2 x^2, ..., k_d x^d)`` with ``ks = (k_2, ..., k_d)``."""
    x = np.asarray(x, dtype=float)
    ks = np.asarray(ks, dtype=float).ravel()
    cols = [x] + [k * x ** (n + 2) for n, k in enumerate(ks)]
    return np.stack(cols, axis=-1)


def embed_codim_k(xp, forms):
    """Point(s) ``(x', x'^T F_1 x', ..., x'^T F_k x')``."""
    xp = np.asarray(xp, dtype=float)
    t = xp.shape[-1]
    normals = []
    for F in forms:
        F = np.asarray(F, dtype=float)
        if F.shape != (t, t):
            raise ValueError(f"form of shape {F.shape} does not match tangent_dim {t}")
        normals.append(np.einsum("...i,ij,...j->...", xp, F, xp))
    if not normals:
        return xp.copy()
    return np.concatenate([xp, np.stack(normals, axis=-1)], axis=-1)


def kappa_from_hessian(eigenvalues):
    """Hessian eigenvalues of ``y = h(x')`` to the ``y = sum kappa_i x_i^2`` convention."""
    return 0.5 * np.asarray(eigenvalues, dtype=float)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldSpec:
    """Parametric description of the local data manifold.

    Use the ``curve2d``, ``hypersurface``, ``space_curve`` and ``codim_k``
    constructors rather than filling the fields by hand.
    """

    kind: str
    tangent_dim: int
    ambient_dim: int
    curvatures: np.ndarray = field(default_factory=lambda: _frozen([]))
    nonlinear_quantities: np.ndarray = field(default_factory=lambda: _frozen([]))
    quadratic_forms: tuple = ()
    flat_flags: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if self.tangent_dim < 1 or self.ambient_dim < self.tangent_dim:
            raise ValueError("need 1 <= tangent_dim <= ambient_dim")
        object.__setattr__(self, "curvatures", _frozen(self.curvatures))
        object.__setattr__(self, "nonlinear_quantities", _frozen(self.nonlinear_quantities))
        forms = tuple(_frozen(F) for F in self.quadratic_forms)
        object.__setattr__(self, "quadratic_forms", forms)
        codim = self.ambient_dim - self.tangent_dim
        if self.kind == "Curve2D":
            if (self.tangent_dim, self.ambient_dim) != (1, 2) or self.curvatures.size != 1:
                raise ValueError("Curve2D needs tangent_dim=1, ambient_dim=2 and one curvature")
        elif self.kind == "Hypersurface":
            if codim != 1 or self.curvatures.size != self.tangent_dim:
                raise ValueError("Hypersurface needs ambient_dim = tangent_dim + 1 and tangent_dim curvatures")
        elif self.kind == "SpaceCurve":
            if self.tangent_dim != 1 or self.nonlinear_quantities.size != codim or codim < 1:
                raise ValueError("SpaceCurve needs tangent_dim=1 and ambient_dim-1 nonlinear quantities")
        else:
            if len(forms) != codim:
                raise ValueError(f"CodimK needs {codim} quadratic forms, got {len(forms)}")
            for F in forms:
                if F.shape != (self.tangent_dim, self.tangent_dim):
                    raise ValueError("quadratic form size must equal tangent_dim")
                if not np.allclose(F, F.T, rtol=0, atol=1e-12):
                    raise ValueError("quadratic forms must be symmetric")
            flags = tuple(bool(f) for f in self.flat_flags) or tuple(
                not np.any(F) for F in forms
            )
            if len(flags) != codim:
                raise ValueError("one flat flag per normal direction")
            for flag, F in zip(flags, forms):
                if flag and np.any(F):
                    raise ValueError("a normal direction flagged flat must have a zero form")
            object.__setattr__(self, "flat_flags", flags)

    # -- constructors -----------------------------------------------------
    @classmethod
    def curve2d(cls, kappa):
        return cls("Curve2D", 1, 2, curvatures=[kappa])

    @classmethod
    def hypersurface(cls, curvatures):
        k = np.atleast_1d(np.asarray(curvatures, dtype=float))
        return cls("Hypersurface", k.size, k.size + 1, curvatures=k)

    @classmethod
    def space_curve(cls, ks):
        ks = np.atleast_1d(np.asarray(ks, dtype=float))
        return cls("SpaceCurve", 1, ks.size + 1, nonlinear_quantities=ks)

    @classmethod
    def codim_k(cls, forms, flat_flags=()):
        forms = [np.asarray(F, dtype=float) for F in forms]
        t = forms[0].shape[0] if forms else 1
        return cls("CodimK", t, t + len(forms), quadratic_forms=tuple(forms),
                   flat_flags=tuple(flat_flags))

    # -- geometry ---------------------------------------------------------
    @property
    def codim(self):
        return self.ambient_dim - self.tangent_dim

    @property
    def embedding_degree(self):
        """Highest polynomial degree of the normal coordinates in the tangent ones."""
        if self.kind == "SpaceCurve":
            return self.ambient_dim
        return 2

    def embed(self, tangent):
        """Map tangent coordinates of shape (N, tangent_dim) to ambient points."""
        T = np.asarray(tangent, dtype=float)
        if T.ndim == 1:
            T = T[:, None] if self.tangent_dim == 1 else T[None, :]
        if self.kind == "Curve2D":
            return embed_curve2d(T[:, 0], self.curvatures[0])
        if self.kind == "Hypersurface":
            return embed_hypersurface(T, self.curvatures)
        if self.kind == "SpaceCurve":
            return embed_space_curve(T[:, 0], self.nonlinear_quantities)
        return embed_codim_k(T, self.quadratic_forms)

    def labels(self):
        t = [f"x_{i + 1}" for i in range(self.tangent_dim)]
        return t + [f"y_{j + 1}" for j in range(self.codim)]

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in ("Curve2D", "Hypersurface"):
            d["curvatures"] = self.curvatures.tolist()
        elif self.kind == "SpaceCurve":
            d["nonlinear_quantities"] = self.nonlinear_quantities.tolist()
        else:
            d["tangent_dim"] = self.tangent_dim
            d["forms"] = [F.ravel().tolist() for F in self.quadratic_forms]
            d["flat_flags"] = list(self.flat_flags)
        return d

    @classmethod
    def from_dict(cls, d):
        """Inverse of :meth:`to_dict`; forms are row-major flat arrays."""
        kind = d["kind"]
        if kind == "Curve2D":
            curv = d.get("curvatures", d.get("kappa"))
            return cls.curve2d(float(np.atleast_1d(curv)[0]))
        if kind == "Hypersurface":
            return cls.hypersurface(d["curvatures"])
        if kind == "SpaceCurve":
            return cls.space_curve(d["nonlinear_quantities"])
        if kind == "CodimK":
            t = int(d["tangent_dim"])
            forms = [np.asarray(F, dtype=float).reshape(t, t) for F in d["forms"]]
            return cls.codim_k(forms, d.get("flat_flags", ()))
        raise ValueError(f"unknown manifold kind {kind!r}")


@dataclass(frozen=True)
class SampleSet:
    """Sample points in the local frame, tangent columns first."""

    points: np.ndarray
    tangent_dim: int
    half_width_L: float
    seed: int
    density: str = "UniformIID"

    def __post_init__(self):
        pts = _frozen(np.atleast_2d(self.points))
        if pts.shape[0] < 1:
            raise ValueError("a sample set needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def n_samples(self):
        return self.points.shape[0]

    @property
    def tangent(self):
        return self.points[:, : self.tangent_dim]

    @property
    def normal(self):
        return self.points[:, self.tangent_dim:]

    def with_points(self, points):
        return SampleSet(points, self.tangent_dim, self.half_width_L, self.seed, self.density)

    def labels(self):
        c = self.points.shape[1] - self.tangent_dim
        return [f"x_{i + 1}" for i in range(self.tangent_dim)] + [
            f"y_{j + 1}" for j in range(c)
        ]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.labels())
            for row in self.points:
                w.writerow([format(v, ".17g") for v in row])


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise scales, one per normal coordinate."""

    stddev_per_normal: tuple
    seed: int

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.stddev_per_normal))
        if any(v < 0 for v in s):
            raise ValueError("noise standard deviations must be non-negative")
        object.__setattr__(self, "stddev_per_normal", s)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def sample_uniform(spec, L, N, seed):
    """Draw ``N`` points with tangent coordinates i.i.d. ``U([-L, L])``.

    Tangent coordinate ``i`` uses its own Philox stream, so results are a
    pure function of ``(spec, L, N, seed)``.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    gens = _rng.streams(seed, spec.tangent_dim, _rng.TAG_SAMPLE)
    T = np.column_stack([_rng.uniform(g, N, -L, L) for g in gens])
    return SampleSet(spec.embed(T), spec.tangent_dim, float(L), int(seed))


def add_noise(samples, noise):
    """Add ``sigma_j * eta`` to normal coordinate ``j``; tangent columns untouched."""
    codim = samples.points.shape[1] - samples.tangent_dim
    sig = noise.stddev_per_normal
    if len(sig) != codim:
        raise ValueError(f"need {codim} noise scales, got {len(sig)}")
    pts = np.array(samples.points)
    gens = _rng.streams(noise.seed, codim, _rng.TAG_NOISE)
    for j, (s, g) in enumerate(zip(sig, gens)):
        if s > 0:
            pts[:, samples.tangent_dim + j] += s * _rng.box_muller(g, pts.shape[0])
    return samples.with_points(pts)


def _check_normal_basis(X, Q, tol=1e-8):
    if Q.shape[0] != X.shape[1]:
        raise ValueError("normal basis rows must equal the ambient dimension")
    G = Q.T @ Q
    if np.max(np.abs(G - np.eye(Q.shape[1]))) > tol:
        raise ValueError("normal basis columns are not orthonormal")
    Xc = X - X.mean(axis=0)
    scale = max(np.linalg.norm(Xc), 1.0)
    if np.linalg.norm(Xc @ Q) > tol * scale:
        raise ValueError("normal basis is not orthogonal to the data subspace")


def bend_dataset(samples, normal_basis, alpha, seed):
    """Bend flat data with random quadratics along the given normal directions.

    Returns ``x + alpha * sum_i (sum_j eta_ij x_j^2) q_i`` where ``q_i`` are the
    columns of ``normal_basis`` and ``eta_ij ~ N(0, 1)`` is drawn once per seed,
    so the displacement is exactly linear in ``alpha``.

    ``samples`` may be a :class:`SampleSet` or an (N, d) array; the same type
    is returned.
    """
    X = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    Q = np.asarray(normal_basis, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    _check_normal_basis(X, Q)
    eta = bending_coefficients(Q.shape[1], X.shape[1], seed)
    out = X + alpha * ((X * X) @ eta.T) @ Q.T
    if isinstance(samples, SampleSet):
        return samples.with_points(out)
    return out


def bending_coefficients(n_normals, ambient_dim, seed):
    """The ``eta`` matrix (n_normals x ambient_dim) used by :func:`bend_dataset`."""
    gens = _rng.streams(seed, n_normals, _rng.TAG_BEND)
    return np.vstack([_rng.box_muller(g, ambient_dim) for g in gens]) if n_normals else (
        np.zeros((0, ambient_dim))
    )
