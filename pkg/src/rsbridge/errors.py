"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code (see cli.EXIT_CODES).
"""


class RsBridgeError(Exception):
    """Base class for all package errors."""


class ConfigError(RsBridgeError):
    """Invalid or inconsistent run configuration."""


class MeshError(RsBridgeError):
    """Mesh generation or mesh quality failure."""


class SolverError(RsBridgeError):
    """Linear-solver or fixed-point failure (non-convergence, bad pivot, ...)."""


class NumericalConsistencyError(SolverError):
    """An internal consistency check failed (e.g. incompatible right-hand side)."""
