"""
Errors
======

Exception hierarchy shared by the numerical core and the CLI pipeline.
The pipeline maps DomainError to exit status 2 and NumericalError to 3.
"""


class WishartRiskError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class DomainError(WishartRiskError, ValueError):
    """Raised when an argument violates a precondition (mu, d, t, partition...)."""

    exit_code = 2


class NumericalError(WishartRiskError, ArithmeticError):
    """Raised when a computation breaks down numerically."""

    exit_code = 3


class NotPositiveDefiniteError(NumericalError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""

    pass
