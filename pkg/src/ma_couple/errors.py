"""Exception hierarchy for the solver package."""


class MACoupleError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(MACoupleError, ValueError):
    pass


class NegativeInputError(MACoupleError, ValueError):
    """A profile handed to a cone operator has values below the clamp tolerance."""


class NonlinearityRangeError(MACoupleError, ValueError):
    """A user nonlinearity returned a negative or non-finite value."""


class WrongRegimeError(MACoupleError, ValueError):
    pass


class BalancedRegimeError(WrongRegimeError):
    """Homogeneous rescaling is impossible when the degree is exactly one."""


class NotInConeError(MACoupleError, ValueError):
    pass


class OutOfDomainError(MACoupleError, ValueError):
    pass


class ZeroCollapseError(MACoupleError, ArithmeticError):
    """The normalized iteration produced an image with (numerically) zero norm."""


class MaxIterExceeded(MACoupleError, RuntimeError):
    """Iteration budget exhausted; the last iterate is kept for diagnostics."""

    def __init__(self, message, iterate=None, iterations=0, change=float("nan"), trace=None):
        super().__init__(message)
        self.iterate = iterate
        self.iterations = iterations
        self.change = change
        self.trace = list(trace or [])
