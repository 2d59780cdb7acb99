"""Exception hierarchy shared by all analysis modules."""


class GmctError(Exception):
    """Base class for errors raised by gmct."""


class ValidationError(GmctError, ValueError):
    """Input data or arguments violate a documented precondition."""


class DegenerateError(GmctError, ArithmeticError):
    """The data admit no finite estimate (zero variance, zero denominator, ...)."""


class NumericError(GmctError, ArithmeticError):
    """A numerical routine failed (factorization, bracketing, divergence)."""


class DivergenceError(NumericError):
    """Cox partial likelihood is monotone: a coefficient runs off to infinity."""

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group
