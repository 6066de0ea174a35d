"""Least-squares fits with rank diagnosis and minimum-norm resolution.

Both entry points (normal system from moments, or the design matrix of a
sample) share one solver.  Columns are equilibrated before the SVD so that
rank is judged on the correlation structure rather than on raw scale: a
normal direction with tiny but non-zero extent (small curvature, small L)
stays solvable, while an identically flat direction, whose column is exactly
zero, is reported as degenerate.  The minimum-norm solution is always taken
in the original, unscaled coefficients.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .manifold_gen import SampleSet

DEFAULT_RTOL = 1e-10
FLAT_TOL = 1e-6


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegressionSolution:
    """Fitted affine model ``f(x) = w.x + b``.

    ``singular_values`` are those of the column-equilibrated system (design
    matrix or normal matrix) on which the rank decision is made.
    ``null_space`` holds an orthonormal basis (columns, in ``[w; b]``
    coordinates) of the directions left free by the data.
    """

    w: np.ndarray
    b: float
    rank: int
    singular_values: np.ndarray
    min_norm_applied: bool
    residual_rms: float
    null_space: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(np.ravel(self.w)))
        object.__setattr__(self, "singular_values", _readonly(self.singular_values))
        object.__setattr__(self, "null_space", _readonly(self.null_space))
        object.__setattr__(self, "b", float(self.b))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"x_{i + 1}" for i in range(self.w.size)))

    @property
    def theta(self):
        return np.concatenate([self.w, [self.b]])

    def summary(self):
        return {
            "rank": int(self.rank),
            "n_parameters": int(self.w.size + 1),
            "min_norm_applied": bool(self.min_norm_applied),
            "residual_rms": None if np.isnan(self.residual_rms) else float(self.residual_rms),
            "b": self.b,
        }

    def to_json(self):
        d = self.summary()
        d["w"] = self.w.tolist()
        d["labels"] = list(self.labels)
        return json.dumps(d, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index", "label", "w"])
            for i, (lab, wi) in enumerate(zip(self.labels, self.w), start=1):
                wr.writerow([i, lab, format(wi, ".17g")])
            wr.writerow([self.w.size + 1, "bias", format(self.b, ".17g")])


@dataclass(frozen=True)
class DegeneracyReport:
    """Rank and free directions of a normal system.

    ``flat_coordinates`` are indices ``i`` (into ``[w; b]``) whose unit vector
    lies in the null space, i.e. the null-space projection of ``e_i`` has
    norm above ``1 - 1e-6``.
    """

    rank: int
    null_space_basis: np.ndarray
    flat_coordinates: tuple
    labels: tuple = ()

    @property
    def deficiency(self):
        return self.null_space_basis.shape[1]

    @property
    def is_degenerate(self):
        return self.deficiency > 0

    def flat_labels(self):
        return [self.labels[i] for i in self.flat_coordinates] if self.labels else []


def _orthonormal_columns(B):
    if B.shape[1] == 0:
        return B
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    return U[:, s > 1e-12 * max(s[0], 1e-300)]


def _min_norm_lstsq(M, rhs, scale, rtol, symmetric=False):
    """Minimum-norm least-squares solution of ``M theta = rhs``.

    ``scale`` holds the column scales used for equilibration (zeros mean
    "leave the column alone").  With ``symmetric=True`` (a normal matrix) the
    rows are scaled by the same factors.  Returns ``(theta, rank, sv, null_basis)``.
    """
    p = M.shape[1]
    s = np.where(scale > 0, scale, 1.0)
    Ms = M / s
    if symmetric:
        Ms = Ms / s[:, None]
        rhs = rhs / s
    U, S, Vt = np.linalg.svd(Ms, full_matrices=M.shape[0] < p)
    S_full = np.zeros(p)
    S_full[: S.size] = S
    smax = S_full[0] if p else 0.0
    rank = int(np.sum(S_full > rtol * smax)) if smax > 0 else 0
    Ur = U[:, :rank]
    z = Vt[:rank].T @ ((Ur.T @ rhs) / S_full[:rank])
    theta = z / s
    null = _orthonormal_columns(Vt[rank:].T / s[:, None])
    if null.shape[1]:
        theta = theta - null @ (null.T @ theta)
    return theta, rank, S_full, null


def _flat_indices(null, tol=FLAT_TOL):
    if null.shape[1] == 0:
        return ()
    norms = np.sum(null * null, axis=1)
    return tuple(int(i) for i in np.flatnonzero(norms > 1.0 - tol))


def solve_normal_system(system, rtol=DEFAULT_RTOL):
    """Solve the normal equations by equilibrated SVD.

    Singular values below ``rtol * sigma_max`` count as zero; a rank-deficient
    system gets its minimum-Euclidean-norm solution.  ``residual_rms`` is the
    root of the quadratic loss, available only when ``<g^2>`` is known.
    """
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    A = np.asarray(system.matrix_A, dtype=float)
    r = np.asarray(system.rhs, dtype=float)
    scale = np.sqrt(np.clip(np.diag(A), 0.0, None))
    theta, rank, sv, null = _min_norm_lstsq(A, r, scale, rtol, symmetric=True)
    if np.isfinite(system.g_squared):
        loss = system.g_squared - 2.0 * theta @ r + theta @ A @ theta
        res = float(np.sqrt(max(loss, 0.0)))
    else:
        res = float("nan")
    d = A.shape[0] - 1
    return RegressionSolution(
        w=theta[:d], b=theta[d], rank=rank, singular_values=sv,
        min_norm_applied=rank < d + 1, residual_rms=res, null_space=null,
        labels=tuple(system.coordinate_labels[:d]),
    )


def _design(points, fit_intercept=True):
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if fit_intercept:
        return np.column_stack([X, np.ones(X.shape[0])])
    return X


def solve_from_data(samples, g_values, rtol=DEFAULT_RTOL, fit_intercept=True):
    """Least-squares fit of ``[X | 1]`` against ``g_values`` via equilibrated SVD.

    With ``fit_intercept=False`` the bias is fixed at 0 and excluded from the
    rank count.
    """
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    if isinstance(samples, SampleSet):
        X, labels = samples.points, tuple(samples.labels())
    else:
        X = np.atleast_2d(np.asarray(samples, dtype=float))
        labels = ()
    y = np.asarray(g_values, dtype=float).ravel()
    if X.shape[0] < 1 or y.size != X.shape[0]:
        raise ValueError(f"need one target per sample, got {y.size} for {X.shape[0]}")
    M = _design(X, fit_intercept)
    scale = np.linalg.norm(M, axis=0)
    theta, rank, sv, null = _min_norm_lstsq(M, y, scale, rtol)
    res = float(np.sqrt(np.mean((M @ theta - y) ** 2)))
    d = X.shape[1]
    if fit_intercept:
        w, b = theta[:d], theta[d]
    else:
        w, b = theta, 0.0
        null = np.vstack([null, np.zeros((1, null.shape[1]))])
    return RegressionSolution(
        w=w, b=b, rank=rank, singular_values=sv,
        min_norm_applied=rank < M.shape[1], residual_rms=res, null_space=null,
        labels=labels,
    )


def diagnose_degeneracy(system, rtol=DEFAULT_RTOL):
    """Rank, null space and flat coordinates of a normal system."""
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    A = np.asarray(system.matrix_A, dtype=float)
    scale = np.sqrt(np.clip(np.diag(A), 0.0, None))
    _, rank, _, null = _min_norm_lstsq(A, np.zeros(A.shape[0]), scale, rtol, symmetric=True)
    return DegeneracyReport(rank, null, _flat_indices(null), tuple(system.coordinate_labels))


def evaluate(solution, points):
    """``w . x + b`` for each row of ``points``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != solution.w.size:
        raise ValueError(f"points have {X.shape[1]} columns, model expects {solution.w.size}")
    return X @ solution.w + solution.b


class LocalLinearRegression(RegressorMixin, BaseEstimator):
    """Affine least-squares regressor with rank diagnosis.

    Unlike a plain ``LinearRegression`` this estimator reports the numerical
    rank of the (column-equilibrated) design, returns the minimum-norm
    coefficients when the data leave directions undetermined, and lists the
    input coordinates that are exactly free (``flat_coordinates_``).

    Parameters
    ----------
    rtol : float, default=1e-10
        Relative singular-value cutoff for the rank decision.
    fit_intercept : bool, default=True

    Attributes
    ----------
    coef_, intercept_ : fitted ``w`` and ``b``
    rank_ : int
    singular_values_ : ndarray
    min_norm_applied_ : bool
    flat_coordinates_ : ndarray of int
        Feature indices whose coefficient is unconstrained by the data.
    residual_rms_ : float
    solution_ : RegressionSolution
    """

    def __init__(self, rtol=DEFAULT_RTOL, fit_intercept=True):
        self.rtol = rtol
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        sol = solve_from_data(X, y, rtol=self.rtol, fit_intercept=self.fit_intercept)
        self.solution_ = sol
        self.coef_ = np.array(sol.w)
        self.intercept_ = sol.b
        self.rank_ = sol.rank
        self.singular_values_ = np.array(sol.singular_values)
        self.min_norm_applied_ = sol.min_norm_applied
        self.residual_rms_ = sol.residual_rms
        flat = _flat_indices(sol.null_space)
        self.flat_coordinates_ = np.array([i for i in flat if i < X.shape[1]], dtype=int)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_
