"""Local orthonormal frames: rigid changes of coordinates, principal
curvatures, (generalized) Frenet-Serret frames and PCA subspaces."""

import csv
import json
from dataclasses import dataclass
from math import factorial

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DegenerateFrame

ORTHO_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# rigid frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalFrame:
    """Rigid change of coordinates ``x -> Q x + t0`` with ``Q`` orthogonal."""

    rotation_Q: np.ndarray
    translation_t0: np.ndarray

    def __post_init__(self):
        Q = _readonly(self.rotation_Q)
        t0 = _readonly(np.ravel(self.translation_t0))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != t0.size:
            raise ValueError("rotation must be square and match the translation length")
        if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > ORTHO_TOL:
            raise ValueError("rotation_Q is not orthogonal")
        object.__setattr__(self, "rotation_Q", Q)
        object.__setattr__(self, "translation_t0", t0)

    @property
    def dim(self):
        return self.translation_t0.size

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.rotation_Q.T + self.translation_t0

    def inverse(self):
        Qt = self.rotation_Q.T
        return LocalFrame(Qt, -Qt @ self.translation_t0)

    def to_dict(self):
        return {"rotation_Q": self.rotation_Q.tolist(),
                "translation_t0": self.translation_t0.tolist()}

    @classmethod
    def random(cls, dim, rng, shift_scale=1.0):
        """Haar-random orthogonal ``Q`` and Gaussian shift, for tests and demos."""
        A = rng.standard_normal((dim, dim))
        Q, R = np.linalg.qr(A)
        Q = Q * np.sign(np.diag(R))
        return cls(Q, shift_scale * rng.standard_normal(dim))


def transform_solution(w, b, frame):
    """Regression coefficients after moving the data by ``frame``.

    If ``(w, b)`` minimizes the loss for data ``x``, then ``(Q w, b - (Q w).t0)``
    minimizes it for the transformed data ``Q x + t0`` with the same targets.
    """
    w = np.asarray(w, dtype=float).ravel()
    if w.size != frame.dim:
        raise ValueError(f"w has length {w.size}, frame has dimension {frame.dim}")
    Qw = frame.rotation_Q @ w
    return Qw, float(b - Qw @ frame.translation_t0)


# ---------------------------------------------------------------------------
# principal curvatures
# ---------------------------------------------------------------------------

def _sign_fix(v, tol=1e-12):
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def principal_curvatures(hessian, sym_tol=1e-10, tie_tol=1e-10):
    """Eigen-decomposition of the graph Hessian at the base point.

    Returns the raw Hessian eigenvalues in descending order together with an
    orthogonal ``rotation`` whose columns are the matching eigenvectors, so
    ``rotation.T @ hessian @ rotation`` is diagonal.  Inside a cluster of
    (numerically) equal eigenvalues the basis is made canonical by
    Gram-Schmidt on the projected unit vectors ``P e_1, P e_2, ...``; every
    eigenvector then has its first non-zero entry positive.

    The values are Hessian eigenvalues, not the ``kappa_i`` of the graph
    ``y = sum kappa_i x_i^2``; use ``manifold_gen.kappa_from_hessian`` for that.
    """
    H = np.asarray(hessian, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("hessian must be a square matrix")
    if np.max(np.abs(H - H.T), initial=0.0) > sym_tol * max(1.0, np.max(np.abs(H))):
        raise ValueError("hessian is not symmetric")
    H = 0.5 * (H + H.T)
    vals, vecs = np.linalg.eigh(H)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    scale = max(1.0, np.max(np.abs(vals), initial=0.0))
    n = vals.size
    out = np.empty_like(vecs)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[i]) <= tie_tol * scale:
            j += 1
        block = vecs[:, i:j]
        if j - i == 1:
            out[:, i] = _sign_fix(block[:, 0])
        else:
            P = block @ block.T
            basis = []
            for e in np.eye(n):
                v = P @ e
                for u in basis:
                    v = v - (u @ v) * u
                nv = np.linalg.norm(v)
                if nv > 1e-8:
                    basis.append(v / nv)
                if len(basis) == j - i:
                    break
            for k, u in enumerate(basis):
                out[:, i + k] = _sign_fix(u)
            vals[i:j] = vals[i:j].mean()
        i = j
    return vals, out


# ---------------------------------------------------------------------------
# Frenet-Serret frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrenetFrame:
    """Orthonormal moving frame of a curve at one point.

    ``basis_V`` holds ``V_1 = T, V_2 = N, V_3 = B, ...`` as rows and
    ``alphas`` the generalized curvatures ``(alpha_2, ..., alpha_d)`` with
    respect to arc length (``alpha_2`` is the curvature, ``alpha_3`` the
    torsion in R^3).  ``speed`` is ``|r'|`` of the supplied parameterization.
    """

    basis_V: np.ndarray
    alphas: np.ndarray
    speed: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "basis_V", _readonly(self.basis_V))
        object.__setattr__(self, "alphas", _readonly(np.ravel(self.alphas)))

    @property
    def dim(self):
        return self.basis_V.shape[0]

    @property
    def curvature(self):
        return float(self.alphas[0])

    @property
    def torsion(self):
        return float(self.alphas[1]) if self.alphas.size > 1 else 0.0

    def frenet_matrix(self):
        """Skew matrix ``K`` with ``[V_1'; ...; V_d'] = K [V_1; ...; V_d]``."""
        d = self.dim
        K = np.zeros((d, d))
        for i, a in enumerate(self.alphas):
            K[i, i + 1] = a
            K[i + 1, i] = -a
        return K

    def as_local_frame(self, base_point):
        """Rigid frame mapping ambient points to Frenet coordinates."""
        V = self.basis_V
        return LocalFrame(V, -V @ np.asarray(base_point, dtype=float))

    def to_dict(self):
        return {"basis_V": self.basis_V.tolist(), "alphas": self.alphas.tolist(),
                "speed": self.speed}


def _derivative_matrix(derivs):
    M = np.column_stack([np.asarray(v, dtype=float).ravel() for v in derivs])
    return M


def generalized_frenet(derivs, tol_curv=None):
    """Generalized Frenet frame from ``r'(t0), r''(t0), ..., r^(d)(t0)`` in R^d.

    The frame is the Gram-Schmidt orthonormalization of the derivative
    sequence.  With pivots ``p_k = |r^(k) - projection on V_1..V_{k-1}|`` and
    speed ``v = p_1`` the curvatures are ``alpha_{k+1} = p_{k+1} / (p_k v)``.
    For ``d >= 3`` the last basis vector is oriented so the frame has
    determinant +1 and ``alpha_d`` carries the matching sign (the torsion
    sign in R^3).  The last vector is fixed by orthogonality alone, so a
    vanishing last pivot (a curve lying in a hyperplane, e.g. a circle in
    R^3) gives ``alpha_d = 0`` rather than an error.

    Raises
    ------
    DegenerateFrame
        If a pivot other than the last falls below ``tol_curv`` (default
        ``1e-10`` times the largest derivative norm).
    """
    M = _derivative_matrix(derivs)
    d = M.shape[0]
    if M.shape[1] != d:
        raise ValueError(f"need {d} derivatives for a curve in R^{d}, got {M.shape[1]}")
    if tol_curv is None:
        tol_curv = 1e-10 * max(np.max(np.linalg.norm(M, axis=0)), np.finfo(float).tiny)
    Q, R = np.linalg.qr(M)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q = Q * signs
    R = R * signs[:, None]
    pivots = np.diag(R).copy()
    if d >= 3 and abs(pivots[-1]) < tol_curv:
        pivots[-1] = 0.0
    for k, p in enumerate(pivots[: d - 1] if d >= 3 else pivots):
        if p < tol_curv:
            raise DegenerateFrame(
                f"derivative {k + 1} adds no new direction (pivot {p:.3e} < {tol_curv:.3e})"
            )
    if d >= 3 and np.linalg.det(Q) < 0:
        Q[:, -1] = -Q[:, -1]
        pivots[-1] = -pivots[-1]
    v = pivots[0]
    alphas = pivots[1:] / (np.abs(pivots[:-1]) * v)
    return FrenetFrame(Q.T, alphas, float(v))


def frenet_frame_3d(d1, d2, d3, tol_curv=None):
    """Tangent, normal, binormal, curvature and torsion from ``r', r'', r'''``.

    ``T = r'/|r'|``, ``N`` is the normalized part of ``r''`` orthogonal to
    ``T``, ``B = T x N``; the torsion sign is that of the component of
    ``r'''`` along ``B``.
    """
    r1, r2, r3 = (np.asarray(v, dtype=float).ravel() for v in (d1, d2, d3))
    if r1.size != 3 or r2.size != 3 or r3.size != 3:
        raise ValueError("frenet_frame_3d expects vectors in R^3")
    scale = max(np.linalg.norm(r1), np.linalg.norm(r2), np.linalg.norm(r3))
    if tol_curv is None:
        tol_curv = 1e-10 * max(scale, np.finfo(float).tiny)
    v = np.linalg.norm(r1)
    if v < tol_curv:
        raise DegenerateFrame("r' vanishes; the curve is not regular here")
    T = r1 / v
    u2 = r2 - (r2 @ T) * T
    p2 = np.linalg.norm(u2)
    if p2 < tol_curv:
        raise DegenerateFrame(f"curvature vanishes (|r'' - (r''.T)T| = {p2:.3e})")
    N = u2 / p2
    B = np.cross(T, N)
    u3 = r3 - (r3 @ T) * T - (r3 @ N) * N
    kappa = p2 / v**2
    tau = (u3 @ B) / (p2 * v)
    return FrenetFrame(np.vstack([T, N, B]), [kappa, tau], float(v))


def nonlinear_quantities(alphas):
    """``k_n = (1/n!) prod_{i<=n} alpha_i`` (``alpha_1 = 1``) for n = 2..d."""
    a = np.concatenate([[1.0], np.ravel(np.asarray(alphas, dtype=float))])
    return np.array([np.prod(a[:n]) / factorial(n) for n in range(2, a.size + 1)])


class PolynomialCurve:
    """Vector polynomial ``r(t) = sum_k C[k] t^k`` with exact derivatives."""

    def __init__(self, coefficients):
        C = np.atleast_2d(np.asarray(coefficients, dtype=float))
        self.coefficients = C  # (degree + 1, d)

    @property
    def dim(self):
        return self.coefficients.shape[1]

    def derivative(self, t, order=0):
        C = self.coefficients
        out = np.zeros(C.shape[1])
        for k in range(order, C.shape[0]):
            fall = 1.0
            for j in range(order):
                fall *= k - j
            out += fall * C[k] * t ** (k - order)
        return out

    def derivatives(self, t, n=None):
        """``[r'(t), ..., r^(n)(t)]``; ``n`` defaults to the ambient dimension."""
        n = self.dim if n is None else n
        return [self.derivative(t, k) for k in range(1, n + 1)]

    def frenet(self, t, tol_curv=None):
        return generalized_frenet(self.derivatives(t), tol_curv)

    def __call__(self, t):
        return self.derivative(t, 0)


def central_difference_weights(order, accuracy=4):
    """Stencil offsets and weights for a central ``order``-th derivative."""
    half = (order - 1) // 2 + accuracy // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    V = np.vander(offsets, increasing=True).T
    rhs = np.zeros(offsets.size)
    rhs[order] = factorial(order)
    return offsets, np.linalg.solve(V, rhs)


def numeric_derivatives(func, t, n, h=1e-3, scale=1.0):
    """Fourth-order central-difference estimates of ``r'(t)..r^(n)(t)``."""
    step = h * scale
    out = []
    for k in range(1, n + 1):
        offs, wts = central_difference_weights(k, 4)
        vals = np.array([np.asarray(func(t + o * step), dtype=float) for o in offs])
        out.append(wts @ vals / step**k)
    return out


def frenet_equation_residual(curve, t, h=1e-3):
    """Max-abs residual of ``dV/ds = K V`` along ``curve`` at parameter ``t``.

    ``dV/dt`` is estimated with a fourth-order central difference of the
    frames at ``t +- h, t +- 2h`` and divided by the speed.
    """
    V = {k: curve.frenet(t + k * h).basis_V for k in (-2, -1, 1, 2)}
    frame = curve.frenet(t)
    dV = (-V[2] + 8 * V[1] - 8 * V[-1] + V[-2]) / (12 * h)
    lhs = dV / frame.speed
    return float(np.max(np.abs(lhs - frame.frenet_matrix() @ frame.basis_V)))


def derivative_structure_residual(derivs, frame):
    """Check the triangular structure implied by the Frenet equations.

    For an arc-length parameterization ``r^(k)`` has no component along
    ``V_j`` for ``j > k`` and its ``V_k`` component is ``prod_{i<=k} alpha_i``;
    for a general parameterization the diagonal scales by ``speed**k``.
    Returns the largest relative violation.
    """
    M = _derivative_matrix(derivs)
    C = frame.basis_V @ M  # C[j, k] = V_{j+1} . r^(k+1)
    d = C.shape[0]
    a = np.concatenate([[1.0], frame.alphas])
    diag = np.array([frame.speed ** (k + 1) * np.prod(a[: k + 1]) for k in range(d)])
    scale = np.maximum(np.linalg.norm(M, axis=0), 1e-300)
    lower = np.abs(np.tril(C, -1)) / scale[None, :]
    res_diag = np.abs(np.diag(C) - diag) / scale
    return float(max(lower.max(initial=0.0), res_diag.max()))


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaSpectrum:
    """Centered SVD of a data matrix.

    ``components`` is a full d x d orthonormal basis (columns ``q_1..q_d``);
    ``singular_values`` has length d, padded with zeros when N < d.
    """

    singular_values: np.ndarray
    components: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        for name in ("singular_values", "components", "mean"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def dim(self):
        return self.mean.size

    def numerical_rank(self, rtol=1e-10):
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > rtol * s[0]))

    def gap_cutoff(self, gap_ratio=1e3):
        """Number of leading components before the first ratio ``s_k/s_{k+1}`` above ``gap_ratio``."""
        s = self.singular_values
        for k in range(s.size - 1):
            if s[k] == 0:
                return k
            if s[k + 1] == 0 or s[k] / s[k + 1] > gap_ratio:
                return k + 1
        return s.size

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "singular_value"])
            for i, s in enumerate(self.singular_values, start=1):
                w.writerow([i, format(float(s), ".17g")])

    def to_json(self):
        return json.dumps({"singular_values": self.singular_values.tolist(),
                           "components": self.components.tolist(),
                           "mean": self.mean.tolist()})


def pca_spectrum(data):
    """Singular values and principal directions of the centered data."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("pca_spectrum needs an (N, d) array with N >= 2")
    mean = X.mean(axis=0)
    _, s, Vt = np.linalg.svd(X - mean, full_matrices=True)
    d = X.shape[1]
    sv = np.zeros(d)
    sv[: s.size] = s
    return PcaSpectrum(sv, Vt.T, mean)


def project_onto(data, spectrum, r):
    """Coordinates of the centered data in the leading ``r`` principal directions."""
    d = spectrum.dim
    if not 1 <= r <= d:
        raise ValueError(f"r must lie in [1, {d}], got {r}")
    X = np.asarray(data, dtype=float)
    return (X - spectrum.mean) @ spectrum.components[:, :r]


class PrincipalSubspace(TransformerMixin, BaseEstimator):
    """Project data onto its leading principal directions.

    Parameters
    ----------
    n_components : int or None
        Fixed subspace dimension.  When None the dimension is the first
        singular-value gap larger than ``gap_ratio``.
    gap_ratio : float
        Ratio ``s_k / s_{k+1}`` that marks the end of the informative spectrum.

    Attributes
    ----------
    spectrum_ : PcaSpectrum
    n_components_ : int
    components_ : ndarray of shape (n_features, n_components_)
    normal_basis_ : ndarray of shape (n_features, n_features - n_components_)
        The discarded (flat) directions.
    """

    def __init__(self, n_components=None, gap_ratio=1e3):
        self.n_components = n_components
        self.gap_ratio = gap_ratio

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        self.spectrum_ = pca_spectrum(X)
        if self.n_components is None:
            k = self.spectrum_.gap_cutoff(self.gap_ratio)
        else:
            k = int(self.n_components)
        if not 1 <= k <= X.shape[1]:
            raise ValueError(f"n_components must lie in [1, {X.shape[1]}]")
        self.n_components_ = k
        self.components_ = np.array(self.spectrum_.components[:, :k])
        self.normal_basis_ = np.array(self.spectrum_.components[:, k:])
        self.mean_ = np.array(self.spectrum_.mean)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        X = check_array(X)
        return project_onto(X, self.spectrum_, self.n_components_)

    def inverse_transform(self, Z):
        check_is_fitted(self, "spectrum_")
        return np.asarray(Z, dtype=float) @ self.components_.T + self.mean_

    def project(self, X):
        """Orthogonal projection onto the affine principal subspace, in ambient coordinates."""
        return self.inverse_transform(self.transform(X))
