"""Inputs for the experiments: target functions and the low-rank point cloud."""

import numpy as np

from .. import _rng
from ..exceptions import ConfigError
from ..idx import read_idx
from ..polynomial import TargetFunction


def resolve_target(g, variables, seed):
    """Build a :class:`TargetFunction` from a config entry.

    ``g`` is either an expression string over ``variables`` or a table
    ``{"random": {"degree": p, "scale": s}}`` for standard-normal coefficients
    drawn from the target stream of ``seed``.
    """
    if isinstance(g, str):
        try:
            return TargetFunction.from_expression(g, variables)
        except Exception as exc:  # sympy raises a zoo of types
            raise ConfigError(f"cannot parse g = {g!r} over {list(variables)}: {exc}") from exc
    if isinstance(g, dict) and "random" in g:
        opts = g["random"] or {}
        deg = int(opts.get("degree", 3))
        if deg < 0:
            raise ConfigError("random g needs a non-negative degree")
        gen = _rng.streams(seed, 1, _rng.TAG_TARGET)[0]
        return TargetFunction.random(len(variables), deg, gen, float(opts.get("scale", 1.0)))
    raise ConfigError(f"g must be an expression string or a random table, got {g!r}")


def random_nonlinear_quantities(n, seed, low=0.5, high=2.0):
    """``n`` values with magnitude in ``[low, high]`` and random sign."""
    gen = _rng.streams(seed, 2, _rng.TAG_TARGET)[1]
    mag = _rng.uniform(gen, n, low, high)
    sign = np.where(gen.random(n) < 0.5, -1.0, 1.0)
    return mag * sign


def synthetic_low_rank(n_samples, ambient_dim, rank, seed):
    """Point cloud of exact rank ``rank`` supported on ``rank`` random coordinates.

    The remaining ``ambient_dim - rank`` coordinates are identically zero,
    much like the always-blank border pixels of scanned digits.  Returns
    ``(X, support)``.
    """
    if not 0 < rank < ambient_dim:
        raise ValueError("need 0 < rank < ambient_dim")
    gens = _rng.streams(seed, 3, _rng.TAG_DATA)
    support = np.sort(gens[0].permutation(ambient_dim)[:rank])
    Z = _rng.box_muller(gens[1], n_samples * rank).reshape(n_samples, rank)
    M = _rng.box_muller(gens[2], rank * rank + rank)
    mix = M[: rank * rank].reshape(rank, rank) / np.sqrt(rank)
    offset = M[rank * rank:]
    X = np.zeros((n_samples, ambient_dim))
    X[:, support] = Z @ mix + offset
    return X, support


def load_dataset(p, seed):
    """Data matrix for the intrinsic-dimension and bending pipelines."""
    if p["dataset"] == "synthetic":
        X, _ = synthetic_low_rank(int(p["n_samples"]), int(p["ambient_dim"]), int(p["rank"]), seed)
        return X
    try:
        return read_idx(p["dataset"], p.get("labels_path"), p.get("label_filter"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read dataset {p['dataset']!r}: {exc}") from exc


def random_unit_vector(dim, seed):
    gen = _rng.streams(seed, 3, _rng.TAG_TARGET)[2]
    u = _rng.box_muller(gen, dim)
    return u / np.linalg.norm(u)


def tangent_quadratic(dim, seed):
    """Coefficients ``(c0, a, S)`` of ``c0 + a.c + c^T S c / 2`` in ``dim`` variables."""
    gen = _rng.streams(seed, 4, _rng.TAG_TARGET)[3]
    raw = _rng.box_muller(gen, 1 + dim + dim * dim)
    c0, a = raw[0], raw[1: dim + 1]
    B = raw[dim + 1:].reshape(dim, dim)
    S = (B + B.T) / (2.0 * np.sqrt(dim))
    return c0, a, S
