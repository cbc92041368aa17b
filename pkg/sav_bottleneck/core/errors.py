from __future__ import annotations


class SavBottleneckError(Exception):
    """Base class for every error raised by the solvers."""


class ParameterValidationError(SavBottleneckError, ValueError):
    """Raised when model parameters are impossible (not merely a corner case)."""


class ConfigError(SavBottleneckError):
    """Raised when a scenario config cannot be parsed or is out of domain."""


class NoSuchEquilibriumError(SavBottleneckError):
    """Raised when a regime is requested whose equilibrium does not exist."""


class GridTooNarrowError(SavBottleneckError):
    """Raised when a time grid cannot carry the whole population at capacity."""


class NumericalFailure(SavBottleneckError):
    """Raised when a solver fails or an oracle disagrees with a closed form."""
