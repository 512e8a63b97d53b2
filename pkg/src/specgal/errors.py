"""Exception types shared across the solver modules."""


class SpecgalError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SpecgalError):
    """Invalid parameters or an inconsistent problem setup."""


class GridMismatchError(SpecgalError):
    """Field, grid, or basis shapes do not line up."""


class NumericError(SpecgalError):
    """Non-finite values appeared where finite numbers are required."""


class NotApplicableError(SpecgalError):
    """The requested quantity is undefined for this configuration."""


class IntegrationError(SpecgalError):
    """Time integration failed before reaching the horizon.

    ``last_good_time`` is the largest time the integrator reached.
    """

    def __init__(self, message: str, last_good_time: float = 0.0):
        super().__init__(message)
        self.last_good_time = last_good_time


class KernelError(SpecgalError):
    """Correlation kernel is not symmetric positive semidefinite."""


class NotTraceClassError(KernelError):
    """Kernel trace exceeds the configured admissibility ceiling."""


class EnsembleError(SpecgalError):
    """Too many ensemble members failed to integrate."""


class DivergentIntegralError(SpecgalError):
    """Admissibility integral diverges for the requested exponents."""


class PoleError(SpecgalError):
    """Propagator evaluated at its pole."""


class InstabilityError(SpecgalError):
    """Field norm exceeded the blow-up guard during evolution."""


class InsufficientDataError(SpecgalError):
    """Not enough recorded samples to evaluate the diagnostic."""


class LinearAlgebraError(SpecgalError):
    """A dense factorization or eigensolve failed."""
