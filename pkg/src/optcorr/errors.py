"""Semantic exception types shared across the library."""


class OptcorrError(Exception):
    """Base class for all optcorr-specific errors."""


class DomainError(OptcorrError, ValueError):
    """An input violates a documented precondition."""


class NumericError(OptcorrError, ArithmeticError):
    """A numerical procedure failed to converge or produced non-finite values."""
