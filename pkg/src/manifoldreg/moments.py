"""Averaged correlations and the least-squares normal system.

The averages ``<.>`` entering the normal equations are available three ways:
closed form under uniform tangent sampling on ``[-L, L]^t``, tensor-product
Gauss-Legendre quadrature (an exact "infinite-N" limit for polynomial data),
and empirical means over a finite sample.
"""

import csv
from dataclasses import dataclass, field
from math import ceil
from typing import NamedTuple

import numpy as np

from .manifold_gen import SampleSet

DEFAULT_QUADRATURE_BUDGET = 4_000_000


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MomentTable:
    """``<x_i x_j>``, ``<x_i>``, ``<g x_i>``, ``<g>`` (and ``<g^2>`` if known).

    ``provenance`` is one of ``"Analytic"``, ``"Quadrature(order)"`` or
    ``"Empirical(N)"``.
    """

    second_moments: np.ndarray
    first_moments: np.ndarray
    rhs_gx: np.ndarray
    rhs_g: float
    provenance: str
    g_squared: float = float("nan")
    labels: tuple = field(default=())

    def __post_init__(self):
        S = _readonly(self.second_moments)
        d = S.shape[0]
        if S.shape != (d, d):
            raise ValueError("second_moments must be square")
        if not np.allclose(S, S.T, rtol=1e-12, atol=0.0):
            raise ValueError("second_moments must be symmetric")
        object.__setattr__(self, "second_moments", S)
        object.__setattr__(self, "first_moments", _readonly(np.ravel(self.first_moments)))
        object.__setattr__(self, "rhs_gx", _readonly(np.ravel(self.rhs_gx)))
        object.__setattr__(self, "rhs_g", float(self.rhs_g))
        object.__setattr__(self, "g_squared", float(self.g_squared))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"x_{i + 1}" for i in range(d)))

    @property
    def dim(self):
        return self.first_moments.size


@dataclass(frozen=True)
class NormalSystem:
    """The (d+1) x (d+1) system ``A [w; b] = rhs`` of the least-squares fit."""

    matrix_A: np.ndarray
    rhs: np.ndarray
    coordinate_labels: tuple
    g_squared: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "matrix_A", _readonly(self.matrix_A))
        object.__setattr__(self, "rhs", _readonly(np.ravel(self.rhs)))

    @property
    def dim(self):
        return self.rhs.size - 1

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row"] + list(self.coordinate_labels) + ["rhs"])
            for lab, row, r in zip(self.coordinate_labels, self.matrix_A, self.rhs):
                w.writerow([lab] + [format(v, ".17g") for v in row] + [format(r, ".17g")])


def analytic_moment_uniform(exponents, L):
    """``<prod_i x_i^{p_i}>`` for independent ``x_i ~ U([-L, L])``."""
    p = np.atleast_1d(np.asarray(exponents, dtype=int))
    if np.any(p < 0):
        raise ValueError("exponents must be non-negative")
    if np.any(p % 2):
        return 0.0
    out = 1.0
    for pi in p:
        out *= L ** int(pi) / (int(pi) + 1)
    return out


class HypersurfaceMoments(NamedTuple):
    mean_y: float
    y_squared: float
    xj2_y: np.ndarray
    determinant_D: float


def hypersurface_moment_table(curvatures, L):
    """Closed-form moments of ``y = sum_i kappa_i x_i^2`` under uniform sampling.

    ``determinant_D`` is the determinant of the (w_y, b) block,
    ``<y^2> - <y>^2 = (4 L^4 / 45) sum_i kappa_i^2``.
    """
    k = np.atleast_1d(np.asarray(curvatures, dtype=float))
    L2, L4 = L * L, L**4
    s1 = k.sum()
    sq = (k * k).sum()
    cross = 0.5 * (s1 * s1 - sq)  # sum_{i<j} k_i k_j
    mean_y = L2 / 3.0 * s1
    y_squared = sq * L4 / 5.0 + 2.0 * cross * L4 / 9.0
    xj2_y = k * L4 / 5.0 + (s1 - k) * L4 / 9.0
    D = sq * 4.0 * L4 / 45.0
    return HypersurfaceMoments(mean_y, y_squared, xj2_y, D)


def default_quadrature_order(spec, g=None, with_g_squared=True):
    """Smallest Gauss-Legendre order integrating every table entry exactly."""
    p = spec.embedding_degree
    dg = 0 if g is None else g.degree
    deg = max(2 * p, (dg + 1) * p, 2 * dg * p if with_g_squared else 0)
    return max(2, ceil((deg + 1) / 2))


def gauss_legendre_grid(tangent_dim, L, order, budget=DEFAULT_QUADRATURE_BUDGET):
    """Tensor-product nodes on ``[-L, L]^t`` with weights summing to 1."""
    if order < 1:
        raise ValueError("order must be positive")
    if order**tangent_dim > budget:
        raise ValueError(
            f"{order}^{tangent_dim} quadrature nodes exceed the budget of {budget}"
        )
    xi, wi = np.polynomial.legendre.leggauss(order)
    xi, wi = L * xi, wi / 2.0
    grids = np.meshgrid(*([xi] * tangent_dim), indexing="ij")
    wgrids = np.meshgrid(*([wi] * tangent_dim), indexing="ij")
    T = np.column_stack([g.ravel() for g in grids])
    W = np.prod(np.column_stack([w.ravel() for w in wgrids]), axis=1)
    return T, W


def _weighted_table(P, gv, W, provenance, labels):
    PW = P * W[:, None]
    S = P.T @ PW
    S = 0.5 * (S + S.T)
    return MomentTable(
        second_moments=S,
        first_moments=PW.sum(axis=0),
        rhs_gx=PW.T @ gv,
        rhs_g=float(W @ gv),
        provenance=provenance,
        g_squared=float(W @ (gv * gv)),
        labels=tuple(labels),
    )


def quadrature_moments(spec, g, L, order=None, budget=DEFAULT_QUADRATURE_BUDGET):
    """Moments over the uniform tangent box by tensor Gauss-Legendre quadrature.

    Exact up to rounding whenever the integrand degree per tangent variable
    is at most ``2 * order - 1``; ``order=None`` picks the smallest such order.
    """
    if order is None:
        order = default_quadrature_order(spec, g)
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    if g.ambient_dim != spec.ambient_dim:
        raise ValueError("target function and manifold have different ambient dimensions")
    T, W = gauss_legendre_grid(spec.tangent_dim, L, order, budget)
    P = spec.embed(T)
    return _weighted_table(P, g(P), W, f"Quadrature({order})", spec.labels())


def empirical_moments(samples, g_values):
    """Sample means of all products entering the normal equations."""
    if isinstance(samples, SampleSet):
        P, labels = samples.points, samples.labels()
    else:
        P = np.atleast_2d(np.asarray(samples, dtype=float))
        labels = [f"x_{i + 1}" for i in range(P.shape[1])]
    gv = np.asarray(g_values, dtype=float).ravel()
    N = P.shape[0]
    if N == 0:
        raise ValueError("empty sample set")
    if gv.size != N:
        raise ValueError(f"{gv.size} target values for {N} samples")
    W = np.full(N, 1.0 / N)
    return _weighted_table(P, gv, W, f"Empirical({N})", labels)


def assemble_normal_system(table):
    """``A = [[<x x^T>, <x>], [<x>^T, 1]]``, ``rhs = [<g x>, <g>]``."""
    d = table.dim
    A = np.empty((d + 1, d + 1))
    A[:d, :d] = table.second_moments
    A[:d, d] = table.first_moments
    A[d, :d] = table.first_moments
    A[d, d] = 1.0
    rhs = np.concatenate([table.rhs_gx, [table.rhs_g]])
    return NormalSystem(A, rhs, tuple(table.labels) + ("bias",), table.g_squared)
