"""Exception types raised across the package."""


class SupportFnError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SupportFnError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ConstraintViolationError(SupportFnError, ValueError):
    """A candidate function does not satisfy the jet constraint."""


class SolverConditioningError(SupportFnError, ArithmeticError):
    """The scaled Gram block is numerically singular."""


class DomainError(SupportFnError, ValueError):
    """A quantity needed by a check is infinite or undefined."""


class EvaluationError(SupportFnError, ValueError):
    """A density could not be evaluated at a sample point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
