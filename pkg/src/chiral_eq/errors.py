"""Exception types raised by the library."""

from __future__ import annotations


class ParameterDomainError(ValueError):
    """A model parameter or evaluation point lies outside its allowed domain."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    ``estimate`` is the last integral estimate and ``error`` the difference
    between the last two refinement levels.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error:.3e})")
        self.estimate = estimate
        self.error = error


class ConvergenceError(RuntimeError):
    """An iterative minimizer stopped before meeting its tolerance.

    The best iterate found so far is attached as ``best``.
    """

    def __init__(self, message: str, best):
        super().__init__(message)
        self.best = best


class ConfigurationError(ValueError):
    """A run configuration is inconsistent or exceeds a resource cap."""
