"""Independent reference implementations used only by the tests.

Each oracle takes a different route from the package code: compositions come
from cut bitmasks rather than recursion, frames from classical Gram-Schmidt
rather than QR, normal equations from explicit sums and an explicit inverse,
and curve fits from exact rational arithmetic.
"""

from fractions import Fraction
from itertools import product

import numpy as np
import sympy


def compositions_by_cuts(n):
    """Compositions of ``n`` via the 2**(n-1) subsets of cut positions."""
    out = []
    for mask in range(2 ** (n - 1)):
        parts, run = [], 1
        for pos in range(n - 1):
            if mask >> pos & 1:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        out.append(tuple(parts))
    return sorted(out)


def compositions_by_product(n):
    """Compositions of ``n`` by filtering every tuple with entries in 1..n (small n only)."""
    out = []
    for m in range(1, n + 1):
        out += [t for t in product(range(1, n + 1), repeat=m) if sum(t) == n]
    return sorted(out)


def gram_schmidt(vectors):
    """Classical Gram-Schmidt: returns (orthonormal rows, pivot norms)."""
    basis, pivots = [], []
    for v in vectors:
        u = np.array(v, dtype=float)
        for e in basis:
            u = u - (e @ v) * e
        n = np.linalg.norm(u)
        pivots.append(n)
        basis.append(u / n)
    return np.array(basis), np.array(pivots)


def normal_equation_fit(X, y):
    """Explicit (d+1)x(d+1) normal equations and an explicit inverse."""
    X = np.asarray(X, dtype=float)
    N, d = X.shape
    Z = np.column_stack([X, np.ones(N)])
    A = np.zeros((d + 1, d + 1))
    r = np.zeros(d + 1)
    for row, target in zip(Z, y):
        A += np.outer(row, row)
        r += target * row
    theta = np.linalg.inv(A / N) @ (r / N)
    return theta[:d], theta[d]


def naive_eval(terms, point):
    """Evaluate ``{multi-index: coefficient}`` at one point with plain loops."""
    total = 0.0
    for alpha, c in terms.items():
        v = c
        for xi, a in zip(point, alpha):
            v *= xi**a
        total += v
    return total


def exact_curve_fit(g, ks, L):
    """Exact least-squares ``[w; b]`` on the curve ``(x, k_2 x^2, ..., k_d x^d)``.

    Every average is an integral of a polynomial in ``x`` over ``[-L, L]``,
    evaluated in rational arithmetic; the normal system is solved exactly.
    ``g`` is a ``TargetFunction``; floats are converted exactly.
    """
    x = sympy.Symbol("x")
    Lr = sympy.Rational(Fraction(L))
    ks = [sympy.Rational(Fraction(float(k))) for k in ks]
    coords = [x] + [k * x ** (n + 2) for n, k in enumerate(ks)]
    feats = coords + [sympy.Integer(1)]
    gx = sum(sympy.Rational(Fraction(c)) * sympy.prod([cj**a for cj, a in zip(coords, alpha)])
             for alpha, c in g.terms.items())

    def mean(expr):
        return sympy.integrate(sympy.expand(expr), (x, -Lr, Lr)) / (2 * Lr)

    m = len(feats)
    A = sympy.Matrix(m, m, lambda i, j: mean(feats[i] * feats[j]))
    r = sympy.Matrix(m, 1, lambda i, _: mean(gx * feats[i]))
    return np.array([float(v) for v in A.LUsolve(r)])


def uniform_moment(p, L):
    """``<x^p>`` for ``x ~ U([-L, L])`` as an exact fraction."""
    if p % 2:
        return Fraction(0)
    return Fraction(L) ** p / (p + 1)
