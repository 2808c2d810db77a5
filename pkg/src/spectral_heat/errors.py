"""Exception hierarchy shared by the numerical modules."""


class SpectralHeatError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SpectralHeatError, ValueError):
    """An argument lies outside the domain of the requested function."""


class PoleError(DomainError):
    """Gamma evaluated at a non-positive integer."""


class NumericalError(SpectralHeatError, ArithmeticError):
    """A numerical procedure failed to reach its requested accuracy."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not meet its tolerance."""

    def __init__(self, message, estimate=None, error=None, intervals=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.intervals = intervals


class NonConvergenceError(NumericalError):
    """A series or iteration did not converge within its budget."""


class FitError(NumericalError):
    """An extrapolation fit was ill-conditioned."""
