"""Exception hierarchy.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch that, while the CLI maps the concrete classes to
exit codes and messages.
"""


class PurityCritError(ValueError):
    """Base class for all library errors."""


class SizeLimit(PurityCritError):
    pass


class InvalidSubset(PurityCritError):
    pass


class InvalidPartition(PurityCritError):
    pass


class InvalidDimension(PurityCritError):
    pass


class DimensionMismatch(PurityCritError):
    pass


class StateValidationError(PurityCritError):
    """A matrix failed density-operator validation.

    ``magnitude`` carries the offending quantity (Hermiticity defect,
    trace deviation or most negative eigenvalue).
    """

    def __init__(self, message, magnitude=None):
        super().__init__(message)
        self.magnitude = magnitude


class NotHermitian(StateValidationError):
    pass


class TraceNotOne(StateValidationError):
    pass


class NotPSD(StateValidationError):
    pass


class InvalidPurity(PurityCritError):
    pass


class IncompleteMap(PurityCritError):
    pass


class Inapplicable(PurityCritError):
    pass


class InvalidFrame(PurityCritError):
    pass
