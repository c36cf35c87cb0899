"""Exception types raised by the numerical core."""


class NumericsError(Exception):
    """Base class for failures of the numerical machinery (as opposed to bad input)."""


class NonFiniteKernelError(NumericsError):
    """A kernel evaluated to a non-finite value on the quadrature grid."""


class FactorizationError(NumericsError):
    """The dense factorization behind a determinant failed."""


class SingularOperatorError(NumericsError):
    """A resolvent solve hit an (almost) singular operator."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class DegenerateConditioningError(NumericsError):
    """Conditioning on a point where the one-point density is numerically zero."""
