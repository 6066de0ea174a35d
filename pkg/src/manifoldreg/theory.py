"""Closed-form leading-order regression coefficients on model manifolds.

All formulas read exact derivatives of a polynomial target ``g`` at the base
point.  Coordinates follow the local frame: tangent coordinates first, then
normal coordinates.

Curvature conventions matter here and are easy to mix up:

* planar curve ``y = kappa x^2`` (:func:`predict_curve2d`);
* hypersurface ``y = sum_i kappa_i x_i^2`` (:func:`predict_hypersurface`);
* space curve ``x_n = k_n x^n`` (:func:`predict_curve3d`,
  :func:`predict_curve_nd`), where ``k_2 = curvature / 2``.  A planar curve
  with ``kappa`` is the space curve with ``k_2 = kappa``; use
  :func:`k2_from_curvature` to go from the geometric curvature to ``k_2``.
"""

from dataclasses import dataclass, field
from math import ceil, factorial, floor

import numpy as np

from .exceptions import FlatDirection
from .polynomial import TargetFunction

NOISE_CONSTANT = 45.0 / 4.0


@dataclass(frozen=True)
class TheoryPrediction:
    """Leading-order ``(w, b)`` with optional correction terms.

    ``error_order_exponents`` gives, per entry of ``[w; b]``, the power of
    ``L`` of the neglected remainder of the leading value.  ``corrections``
    lists ``(index, value, description)`` terms that refine the leading value
    at ``index`` (``index == len(w)`` denotes the bias).
    """

    w_leading: np.ndarray
    b_leading: float
    corrections: tuple = ()
    error_order_exponents: tuple = ()
    labels: tuple = field(default=())

    def __post_init__(self):
        w = np.array(np.ravel(self.w_leading), dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w_leading", w)
        object.__setattr__(self, "b_leading", float(self.b_leading))

    @property
    def theta(self):
        return np.concatenate([self.w_leading, [self.b_leading]])

    def corrected_theta(self):
        th = self.theta.copy()
        for idx, val, _ in self.corrections:
            th[idx] += val
        return th

    def rows(self):
        labels = self.labels or tuple(f"w_{i + 1}" for i in range(self.w_leading.size)) + ("b",)
        th, corr = self.theta, self.corrected_theta()
        exps = self.error_order_exponents or (None,) * th.size
        return [
            {"coefficient": lab, "leading": th[i], "corrected": corr[i], "error_exponent": exps[i]}
            for i, lab in enumerate(labels)
        ]


@dataclass(frozen=True)
class IndexSequenceSet:
    """Ordered compositions of ``n``: positive sequences summing to ``n``."""

    n: int
    sequences: tuple

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)


def partial_derivative(g, multi_index):
    """Exact partial derivative of a polynomial target."""
    return g.partial(multi_index)


def _unit(d, *idx):
    e = [0] * d
    for i in idx:
        e[i] += 1
    return e


def k2_from_curvature(curvature):
    """Space-curve coefficient ``k_2`` of a curve with geometric curvature ``curvature``."""
    return 0.5 * curvature


def k3_from_curvature_torsion(curvature, torsion):
    return curvature * torsion / 6.0


# ---------------------------------------------------------------------------
# planar curve
# ---------------------------------------------------------------------------

def predict_curve2d(g, kappa):
    """Leading-order coefficients on ``(x, kappa x^2)``.

    ``w_x = g_x(0)``, ``w_y = g_y(0) + g_xx(0) / (2 kappa)``, ``b = g(0)``,
    with remainders ``O(L^2)``, ``O(L^2)`` and ``O(L^4)``.
    """
    if g.ambient_dim != 2:
        raise ValueError("predict_curve2d needs a target in two variables")
    if kappa == 0:
        raise FlatDirection("kappa = 0: the y direction is flat")
    gx = g.partial_at_origin((1, 0))
    gy = g.partial_at_origin((0, 1))
    gxx = g.partial_at_origin((2, 0))
    return TheoryPrediction(
        [gx, gy + gxx / (2.0 * kappa)], g.value_at_origin(),
        error_order_exponents=(2, 2, 4), labels=("w_x", "w_y", "b"),
    )


def predict_curve2d_noisy(g, kappa, L, sigma):
    """``w_y`` on ``y = kappa x^2 + sigma eta`` with ``eta ~ N(0, 1)``:

    ``g_y(0) + (1/2) kappa L^4 / (kappa^2 L^4 + 45 sigma^2 / 4) g_xx(0)``.
    """
    denom = kappa**2 * L**4 + NOISE_CONSTANT * sigma**2
    if denom <= 0:
        raise FlatDirection("kappa and sigma both vanish: w_y is undetermined")
    gy = g.partial_at_origin((0, 1))
    gxx = g.partial_at_origin((2, 0))
    return gy + 0.5 * kappa * L**4 / denom * gxx


# ---------------------------------------------------------------------------
# hypersurface
# ---------------------------------------------------------------------------

def predict_hypersurface(g, curvatures, L):
    """Leading-order coefficients on ``(x', sum_i kappa_i x_i^2)``.

    ``w_i = g_{x_i}(0)``, ``w_y = g_y(0) + (1/2) sum_i kappa_i g_{x_i x_i} /
    sum_i kappa_i^2``, ``b = g(0)``.  The ``O(L^2)`` part of ``b`` is returned
    as a correction:
    ``(1/2) sum_i g_{x_i x_i} (L^2/3) (sum_{j!=i} kappa_j^2 - kappa_i sum_{j!=i} kappa_j)
    / sum_k kappa_k^2``.
    """
    k = np.atleast_1d(np.asarray(curvatures, dtype=float))
    t = k.size
    if g.ambient_dim != t + 1:
        raise ValueError(f"target needs {t + 1} variables for {t} curvatures")
    sq = float(k @ k)
    if sq == 0:
        raise FlatDirection("all principal curvatures vanish: the normal direction is flat")
    d = t + 1
    grad = [g.partial_at_origin(_unit(d, i)) for i in range(t)]
    gy = g.partial_at_origin(_unit(d, t))
    gxx = np.array([g.partial_at_origin(_unit(d, i, i)) for i in range(t)])
    wy = gy + 0.5 * float(k @ gxx) / sq
    s1 = k.sum()
    others_sq = sq - k * k
    others_sum = s1 - k
    b_corr = 0.5 * float(np.sum(gxx * (L * L / 3.0) * (others_sq - k * others_sum))) / sq
    labels = tuple(f"w_x{i + 1}" for i in range(t)) + ("w_y", "b")
    return TheoryPrediction(
        grad + [wy], g.value_at_origin(),
        corrections=((d, b_corr, "O(L^2) bias term from curvature mismatch"),),
        error_order_exponents=(2,) * t + (2, 2), labels=labels,
    )


# ---------------------------------------------------------------------------
# space curves
# ---------------------------------------------------------------------------

def predict_curve3d(g, k2, k3):
    """Leading-order coefficients on ``(x, k_2 x^2, k_3 x^3)``.

    ``w_x = g_x``, ``w_y = g_y + g_xx / (2 k_2)``,
    ``w_z = g_z + (k_2 / k_3) g_xy + g_xxx / (6 k_3)``, ``b = g(0)``; remainders
    ``O(L^4)``, ``O(L^2)``, ``O(L^2)``, ``O(L^4)``.
    """
    if g.ambient_dim != 3:
        raise ValueError("predict_curve3d needs a target in three variables")
    if k2 == 0:
        raise FlatDirection("k_2 = 0: the normal (y) direction is flat")
    if k3 == 0:
        raise FlatDirection("k_3 = 0: the binormal (z) direction is flat")
    p = g.partial_at_origin
    wx = p((1, 0, 0))
    wy = p((0, 1, 0)) + p((2, 0, 0)) / (2.0 * k2)
    wz = p((0, 0, 1)) + (k2 / k3) * p((1, 1, 0)) + p((3, 0, 0)) / (6.0 * k3)
    return TheoryPrediction(
        [wx, wy, wz], g.value_at_origin(),
        error_order_exponents=(4, 2, 2, 4), labels=("w_x", "w_y", "w_z", "b"),
    )


def enumerate_index_sequences(n):
    """All ordered compositions of ``n`` in lexicographic order (``2**(n-1)`` of them)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    out = []

    def rec(prefix, left):
        if left == 0:
            out.append(tuple(prefix))
            return
        for j in range(1, left + 1):
            rec(prefix + [j], left - j)

    rec([], n)
    return IndexSequenceSet(n, tuple(out))


def error_order(n, d):
    """Power of ``L`` in the remainder of ``w_n`` on a curve in R^d.

    ``2 (ceil(d/2) - floor(n/2))``; ``n = 0`` gives the bias exponent
    ``2 ceil(d/2)``.  For even ``d`` and even ``n`` this evaluates two below
    the rate produced by the parity-block projection argument (see
    :func:`block_error_order`); ``n = d`` then even yields 0.
    """
    if not 0 <= n <= d:
        raise ValueError(f"need 0 <= n <= d, got n={n}, d={d}")
    if n == 0:
        return 2 * ceil(d / 2)
    return 2 * (ceil(d / 2) - floor(n / 2))


def block_error_order(n, d):
    """Remainder exponent of ``w_n`` from projecting the first neglected monomial.

    The fit on a curve ``x_j = k_j x^j`` splits into odd and even blocks.
    Within a block the highest represented power is ``P`` (the largest
    ``j <= d`` of the parity of ``n``); the leading unrepresented monomial
    ``x^(P+2)`` leaks into the ``x^n`` coefficient at order ``L^(P+2-n)``.
    """
    if not 0 <= n <= d:
        raise ValueError(f"need 0 <= n <= d, got n={n}, d={d}")
    top = d if (d - n) % 2 == 0 else d - 1
    return top + 2 - n


def _composition_term(g, seq, ks_full):
    d = g.ambient_dim
    alpha = [0] * d
    coeff = 1.0
    for j in seq:
        alpha[j - 1] += 1
        coeff *= ks_full[j - 1]
    return coeff / factorial(len(seq)) * g.partial_at_origin(alpha)


def predict_curve_nd(g, ks, n, d=None):
    """Leading-order ``w_n`` on the curve ``(x, k_2 x^2, ..., k_d x^d)``.

    ``ks = (k_2, ..., k_d)`` (``k_1 = 1`` is implied).  The value is

        sum over compositions (j_1, ..., j_m) of n of
        prod_i k_{j_i} / (m! k_n) * d^m g / dx_{j_1} ... dx_{j_m} (0)

    Returns ``(w_n, error_order(n, d))``.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    d = ks.size + 1 if d is None else int(d)
    if ks.size != d - 1:
        raise ValueError(f"need d-1 = {d - 1} nonlinear quantities, got {ks.size}")
    if g.ambient_dim != d:
        raise ValueError(f"target has {g.ambient_dim} variables, curve lives in R^{d}")
    if not 1 <= n <= d:
        raise ValueError(f"need 1 <= n <= d, got n={n}")
    ks_full = np.concatenate([[1.0], ks])
    kn = ks_full[n - 1]
    if kn == 0:
        raise FlatDirection(f"k_{n} = 0: direction {n} is flat")
    total = sum(_composition_term(g, seq, ks_full) for seq in enumerate_index_sequences(n))
    return total / kn, error_order(n, d)


def predict_curve_nd_all(g, ks):
    """:func:`predict_curve_nd` for every ``n`` plus ``b = g(0)``."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    d = ks.size + 1
    w, exps = [], []
    for n in range(1, d + 1):
        wn, e = predict_curve_nd(g, ks, n, d)
        w.append(wn)
        exps.append(e)
    labels = tuple(f"w_{n}" for n in range(1, d + 1)) + ("b",)
    return TheoryPrediction(w, g.value_at_origin(),
                            error_order_exponents=tuple(exps) + (error_order(0, d),),
                            labels=labels)


def predict_codim2_noisy_wy2(g, sigma, index=-1):
    """Leading ``w`` of a flat normal direction regularized by noise of scale ``sigma``.

    Returns ``dg/dy(0)`` for the coordinate ``index``; the remainder is
    ``O(sigma^2)``.
    """
    if sigma <= 0:
        raise FlatDirection("sigma = 0 leaves the flat direction undetermined")
    d = g.ambient_dim
    return g.partial_at_origin(_unit(d, index % d))

