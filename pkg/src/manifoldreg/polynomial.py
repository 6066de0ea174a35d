"""Exact multivariate polynomials used as regression targets ``g``."""

from math import factorial, prod

import numpy as np


def _as_index(alpha, dim):
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dim:
        raise ValueError(f"multi-index {alpha} does not have length {dim}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in multi-index {alpha}")
    return alpha


class TargetFunction:
    """Polynomial ``g: R^d -> R`` stored as ``{multi-index: coefficient}``.

    Coordinates are ordered as the ambient coordinates of the local frame:
    tangent coordinates first, then the normal ones.  Differentiation is exact
    (coefficients only), so derivatives at the base point carry no truncation
    error.

    Parameters
    ----------
    terms : mapping or iterable of (multi_index, coefficient)
        Repeated multi-indices are summed; zero coefficients are dropped.
    ambient_dim : int
        Number of variables.
    """

    def __init__(self, terms, ambient_dim):
        self.ambient_dim = int(ambient_dim)
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")
        items = terms.items() if hasattr(terms, "items") else terms
        acc = {}
        for alpha, c in items:
            alpha = _as_index(alpha, self.ambient_dim)
            acc[alpha] = acc.get(alpha, 0.0) + float(c)
        self.terms = {a: c for a, c in sorted(acc.items()) if c != 0.0}

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, ambient_dim):
        return cls({(0,) * ambient_dim: value}, ambient_dim)

    @classmethod
    def linear(cls, w, b=0.0):
        w = np.asarray(w, dtype=float).ravel()
        d = w.size
        terms = {(0,) * d: b}
        for i, wi in enumerate(w):
            e = [0] * d
            e[i] = 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + wi
        return cls(terms, d)

    @classmethod
    def from_expression(cls, expr, variables):
        """Parse a string such as ``"2*x**2 + 6*x*y + 10"`` with sympy.

        ``variables`` lists the variable names in ambient-coordinate order.
        """
        import sympy

        syms = sympy.symbols(list(variables))
        if not isinstance(syms, (list, tuple)):
            syms = [syms]
        local = {str(s): s for s in syms}
        poly = sympy.Poly(sympy.sympify(expr.replace("^", "**"), locals=local), *syms)
        return cls({m: float(c) for m, c in poly.terms()}, len(syms))

    @classmethod
    def random(cls, ambient_dim, degree, rng, scale=1.0):
        """All monomials up to ``degree`` with standard-normal coefficients."""
        terms = {}
        for alpha in monomials(ambient_dim, degree):
            terms[alpha] = scale * float(rng.standard_normal())
        return cls(terms, ambient_dim)

    # -- queries ----------------------------------------------------------
    @property
    def degree(self):
        return max((sum(a) for a in self.terms), default=0)

    def coefficient(self, alpha):
        return self.terms.get(_as_index(alpha, self.ambient_dim), 0.0)

    def value_at_origin(self):
        return self.coefficient((0,) * self.ambient_dim)

    def partial(self, alpha):
        """Exact partial derivative ``d^|alpha| g / dx^alpha`` as a new polynomial."""
        alpha = _as_index(alpha, self.ambient_dim)
        out = {}
        for beta, c in self.terms.items():
            if any(b < a for a, b in zip(alpha, beta)):
                continue
            factor = 1
            for a, b in zip(alpha, beta):
                for k in range(a):
                    factor *= b - k
            gamma = tuple(b - a for a, b in zip(alpha, beta))
            out[gamma] = out.get(gamma, 0.0) + c * factor
        return TargetFunction(out, self.ambient_dim)

    def partial_at_origin(self, alpha):
        alpha = _as_index(alpha, self.ambient_dim)
        return self.coefficient(alpha) * prod(factorial(a) for a in alpha)

    def gradient_at_origin(self):
        eye = np.eye(self.ambient_dim, dtype=int)
        return np.array([self.partial_at_origin(e) for e in eye])

    def hessian_at_origin(self):
        d = self.ambient_dim
        H = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                e = [0] * d
                e[i] += 1
                e[j] += 1
                H[i, j] = self.partial_at_origin(e)
        return H

    def __call__(self, points):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if X.shape[1] != self.ambient_dim:
            raise ValueError(
                f"points have {X.shape[1]} columns, expected {self.ambient_dim}"
            )
        out = np.zeros(X.shape[0])
        if not self.terms:
            return out
        max_pow = max(max(a) for a in self.terms)
        powers = [np.ones_like(X)]
        for _ in range(max_pow):
            powers.append(powers[-1] * X)
        for alpha, c in self.terms.items():
            term = np.full(X.shape[0], c)
            for j, a in enumerate(alpha):
                if a:
                    term = term * powers[a][:, j]
            out += term
        return out

    def __add__(self, other):
        if not isinstance(other, TargetFunction):
            other = TargetFunction.constant(float(other), self.ambient_dim)
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("ambient dimensions differ")
        merged = list(self.terms.items()) + list(other.terms.items())
        return TargetFunction(merged, self.ambient_dim)

    __radd__ = __add__

    def __mul__(self, scalar):
        return TargetFunction(
            {a: c * float(scalar) for a, c in self.terms.items()}, self.ambient_dim
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, TargetFunction)
            and other.ambient_dim == self.ambient_dim
            and other.terms == self.terms
        )

    def __repr__(self):
        if not self.terms:
            return f"TargetFunction(0, ambient_dim={self.ambient_dim})"
        parts = []
        for alpha, c in self.terms.items():
            mono = "*".join(
                f"x{j + 1}" + (f"^{a}" if a > 1 else "") for j, a in enumerate(alpha) if a
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"TargetFunction({' + '.join(parts)}, ambient_dim={self.ambient_dim})"

    def to_dict(self):
        return {
            "ambient_dim": self.ambient_dim,
            "terms": [[list(a), c] for a, c in self.terms.items()],
        }


def monomials(dim, degree):
    """All exponent tuples of length ``dim`` with total degree <= ``degree``."""

    def rec(prefix, left, slots):
        if slots == 0:
            yield tuple(prefix)
            return
        for k in range(left + 1):
            yield from rec(prefix + [k], left - k, slots - 1)

    return sorted(rec([], degree, dim), key=lambda a: (sum(a), tuple(-x for x in a)))
