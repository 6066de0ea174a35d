"""Exception types shared across the package."""


class ManifoldRegError(Exception):
    """Base class for errors raised by manifoldreg."""


class DegenerateFrame(ManifoldRegError, ValueError):
    """A Frenet-type frame cannot be built because a pivot vanishes."""


class FlatDirection(ManifoldRegError, ZeroDivisionError):
    """A closed-form prediction divides by a vanishing curvature quantity."""


class ConfigError(ManifoldRegError, ValueError):
    """An experiment configuration is missing keys or has invalid values."""
