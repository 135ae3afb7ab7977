"""Exception types shared across the package."""


class BenchError(Exception):
    """Base class for all errors raised by bosoncert."""


class DimensionError(BenchError, ValueError):
    """Matrix shape or mode/particle count is invalid."""


class SelectionError(BenchError, ValueError):
    """Mode index or input selection is out of range or malformed."""


class DomainError(BenchError, ValueError):
    """Parameters lie outside the domain of a formula (e.g. n >= m)."""


class SizeError(BenchError, ValueError):
    """Problem exceeds the enumeration caps of the exact oracle."""


class UndefinedStatisticError(DomainError):
    """CV or skewness is undefined (zero mean or zero variance)."""


class InsufficientSamplesError(BenchError, ValueError):
    """Too few samples to estimate a covariance."""


class NumericalError(BenchError, ArithmeticError):
    """A numerical self-check failed (residual above threshold)."""


class ConfigError(BenchError, ValueError):
    """Malformed experiment configuration (bad flag values, empty ranges)."""
