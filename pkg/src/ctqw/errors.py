"""Exception hierarchy.

Validation errors (bad input, unsatisfiable request) derive from
``ValidationError``; failures of a numerical procedure on valid input derive
from ``NumericalError``.  The CLI maps the two families to exit codes 1 and 2.
"""


class CTQWError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(CTQWError, ValueError):
    pass


class NumericalError(CTQWError, ArithmeticError):
    pass


class NonHermitianInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonMonotonicTimes(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class InvalidNode(ValidationError):
    pass


class EdgeNotPresent(ValidationError):
    pass


class ConstraintUnsatisfiable(ValidationError):
    pass


class SeedNotNormalized(ValidationError):
    pass


class UnsupportedFamily(ValidationError):
    pass


class OutOfModelRange(ValidationError):
    pass


class NegligibleEfficiency(ValidationError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SlowConvergence(NumericalError):
    """Raised when absorption has not finished by the time cap.

    The partially integrated result is kept on ``result`` so callers can
    still inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
