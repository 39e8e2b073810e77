"""Exception hierarchy.

Everything raised on bad input derives from :class:`InvalidInputError`
(a ``ValueError``) so the CLI can map it to exit code 2; numerical
failures derive from :class:`NonConvergenceError` (exit code 3).
"""


class InvalidInputError(ValueError):
    pass


class SingularMarginalError(InvalidInputError):
    """Bob's reduced state is not invertible, so the local filter is undefined."""


class NotCompletelyPositiveError(InvalidInputError):
    pass


class InvalidOrderError(InvalidInputError):
    pass


class NonFiniteIntegrandError(ArithmeticError):
    pass


class InvalidBlochLengthError(InvalidInputError):
    pass


class InvalidRayError(InvalidInputError):
    pass


class NonMonotonePredicateError(InvalidInputError):
    pass


class BranchDomainError(InvalidInputError):
    """A closed-form branch is evaluated outside the region where it is real."""

    def __init__(self, a, alpha, c, message=None):
        self.a = a
        self.alpha = alpha
        self.c = c
        super().__init__(message or f"branch expression is not real at a={a!r}, alpha={alpha!r}, c={c!r}")


class DegenerateHullError(InvalidInputError):
    def __init__(self, message, collinear=False):
        self.collinear = collinear
        super().__init__(message)


class NonConvergenceError(RuntimeError):
    pass
