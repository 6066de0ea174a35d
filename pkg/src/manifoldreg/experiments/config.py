"""Experiment configuration: loading, defaults and validation.

A config file (TOML or JSON) holds flat top-level keys that apply to every
experiment (``seed``, ``out``, ``format``, ``plot``) and one optional table per
experiment, keyed by the CLI subcommand name::

    seed = 7

    [sweep-curvature]
    kappas = [0.001, 0.01, 0.1, 1.0]
    N = 1000

Keys missing from a table take the defaults below.
"""

import hashlib
import json
import sys
from dataclasses import dataclass, field

from ..exceptions import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CURVE2D_G = "2*x^2 + 2*y^2 + 6*x*y + 3*x + 4*y + 10"

# experiment kind -> CLI name
KINDS = {
    "SweepCurvature": "sweep-curvature",
    "SweepNoise": "sweep-noise",
    "ValidateHypersurface": "validate-hypersurface",
    "ValidateCurveNd": "validate-curve",
    "Degeneracy": "degeneracy",
    "IntrinsicDim": "intrinsic-dim",
    "Bend": "bend",
}
NAMES = {v: k for k, v in KINDS.items()}

_LS = [0.1, 0.05, 0.025, 0.0125]

DEFAULTS = {
    "SweepCurvature": {
        "g": CURVE2D_G,
        "kappas": [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0],
        "L": 0.1,
        "N": 1000,
    },
    "SweepNoise": {
        "g": CURVE2D_G,
        "kappa": 0.1,
        "L": 0.1,
        "N": 100_000,
        "sigmas": [0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 0.1, 1.0],
        "n_seeds": 1,
        "scatter_sigmas": [0.0, 1e-3, 2e-3],
        "scatter_points": 2000,
    },
    "ValidateHypersurface": {
        "curvatures": [1.0, 2.0],
        "g": {"random": {"degree": 3}},
        "Ls": _LS,
    },
    "ValidateCurveNd": {
        "d": 5,
        "ks": None,
        "g": {"random": {"degree": 3}},
        "Ls": _LS,
    },
    "Degeneracy": {
        "forms": [[[1.0, 0.0], [0.0, 2.0]], [[0.0, 0.0], [0.0, 0.0]]],
        "g": "10 + x_1 - 2*x_2 + 3*y_1 + 4*y_2 + y_2^3",
        "L": 0.1,
        "N": 100_000,
        "sigmas": [1e-2, 5e-3],
        "n_seeds": 20,
    },
    "IntrinsicDim": {
        "dataset": "synthetic",
        "labels_path": None,
        "label_filter": None,
        "n_samples": 200,
        "ambient_dim": 100,
        "rank": 30,
        "gap_ratio": 1e3,
        "perturbation": 1.0,
    },
    "Bend": {
        "dataset": "synthetic",
        "labels_path": None,
        "label_filter": None,
        "n_samples": 200,
        "ambient_dim": 100,
        "rank": 30,
        "gap_ratio": 1e3,
        "alphas": [1e-4, 1e-6, 1e-8],
        "out_shift": 0.1,
    },
}

GLOBAL_KEYS = {"seed", "out", "format", "plot"}


@dataclass(frozen=True)
class ExperimentConfig:
    """An experiment kind plus its full parameter table (defaults filled in)."""

    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        params = dict(DEFAULTS[self.experiment])
        unknown = set(self.parameters) - set(params)
        if unknown:
            raise ConfigError(f"{self.experiment}: unknown keys {sorted(unknown)}")
        params.update(self.parameters)
        object.__setattr__(self, "parameters", params)
        try:
            object.__setattr__(self, "seed", int(self.seed))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"seed must be an integer, got {self.seed!r}") from exc
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        _validate(self.experiment, params)

    def __getitem__(self, key):
        return self.parameters[key]

    @property
    def name(self):
        return KINDS[self.experiment]

    def to_dict(self):
        return {"experiment": self.experiment, "seed": self.seed, "parameters": self.parameters}

    def config_hash(self):
        """SHA-256 of the canonical JSON form; identifies a run's inputs."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _grid(name, p, key, positive=False, nonneg=False):
    v = p[key]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{name}: {key} must be a non-empty list")
    try:
        vals = [float(x) for x in v]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {key} must hold numbers") from exc
    if positive and any(x <= 0 for x in vals):
        raise ConfigError(f"{name}: {key} must be positive")
    if nonneg and any(x < 0 for x in vals):
        raise ConfigError(f"{name}: {key} must be non-negative")


def _positive(name, p, *keys):
    for k in keys:
        try:
            ok = float(p[k]) > 0
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ConfigError(f"{name}: {k} must be a positive number")


def _count(name, p, *keys):
    for k in keys:
        v = p[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 1 or int(v) != v:
            raise ConfigError(f"{name}: {k} must be a positive integer")


def _validate(name, p):
    if name == "SweepCurvature":
        _grid(name, p, "kappas", positive=True)
        _positive(name, p, "L")
        _count(name, p, "N")
    elif name == "SweepNoise":
        _grid(name, p, "sigmas", nonneg=True)
        _positive(name, p, "kappa", "L")
        _count(name, p, "N", "n_seeds", "scatter_points")
    elif name == "ValidateHypersurface":
        _grid(name, p, "curvatures")
        _grid(name, p, "Ls", positive=True)
        if len(p["curvatures"]) + 1 > 8:
            raise ConfigError(f"{name}: ambient dimension above 8 exceeds the quadrature budget")
    elif name == "ValidateCurveNd":
        _grid(name, p, "Ls", positive=True)
        _count(name, p, "d")
        if not 2 <= p["d"] <= 7:
            raise ConfigError(f"{name}: d must lie in [2, 7]")
        if p["ks"] is not None:
            _grid(name, p, "ks")
            if len(p["ks"]) != p["d"] - 1:
                raise ConfigError(f"{name}: ks must hold d - 1 values (k_2..k_d)")
    elif name == "Degeneracy":
        _grid(name, p, "sigmas", positive=True)
        _positive(name, p, "L")
        _count(name, p, "N", "n_seeds")
        if not isinstance(p["forms"], list) or len(p["forms"]) < 2:
            raise ConfigError(f"{name}: forms must list at least two quadratic forms")
    elif name in ("IntrinsicDim", "Bend"):
        _count(name, p, "n_samples", "ambient_dim", "rank")
        _positive(name, p, "gap_ratio")
        if p["rank"] >= p["ambient_dim"]:
            raise ConfigError(f"{name}: rank must be below ambient_dim")
        if not isinstance(p["dataset"], str) or not p["dataset"]:
            raise ConfigError(f"{name}: dataset must be 'synthetic' or a file path")
        if name == "Bend":
            _grid(name, p, "alphas", positive=True)


def read_config_file(path):
    """Parse a TOML or JSON config file into a plain dict."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if str(path).endswith(".json"):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    else:
        try:
            data = tomllib.loads(raw.decode())
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return data


def make_config(experiment, data=None, seed=None):
    """Build the config of one experiment from a parsed file (may be None).

    ``experiment`` is a kind (``"SweepNoise"``) or CLI name (``"sweep-noise"``).
    An explicit ``seed`` overrides the file.
    """
    kind = NAMES.get(experiment, experiment)
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    data = data or {}
    unknown = {k for k, v in data.items() if not isinstance(v, dict)} - GLOBAL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    table = data.get(KINDS[kind], {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{KINDS[kind]}] must be a table")
    table = dict(table)
    s = table.pop("seed", data.get("seed", 0)) if seed is None else seed
    return ExperimentConfig(kind, table, s)


def load_config(path, experiment, seed=None):
    return make_config(experiment, read_config_file(path), seed)
