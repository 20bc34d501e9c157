"""Exception types shared across the package."""


class FourierLabError(Exception):
    """Base class for all package errors."""


class DomainError(FourierLabError, ValueError):
    """An expression was evaluated outside the set where it is defined."""


class NumericalError(FourierLabError, ArithmeticError):
    """A quadrature or linear-algebra step produced a non-finite value."""


class ConfigError(FourierLabError, ValueError):
    """A run configuration is malformed or names unknown suites."""


class ToleranceError(FourierLabError):
    """Adaptive refinement hit its panel budget before reaching tolerance.

    The best available estimate is kept on the exception so callers can
    still report it.
    """

    def __init__(self, message, best=None, error_estimate=None):
        super().__init__(message)
        self.best = best
        self.error_estimate = error_estimate
