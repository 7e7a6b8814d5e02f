"""Exception hierarchy shared by all modules.

Validation problems derive from ``ValidationError`` (CLI exit code 2), numerical
failures from ``NumericalError`` (CLI exit code 3).
"""


class BiorthoError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(BiorthoError, ValueError):
    pass


class NumericalError(BiorthoError, ArithmeticError):
    pass


class PoleError(NumericalError):
    pass


class ZeroError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class ContourCollisionError(NumericalError):
    pass


class ConfluenceError(ValidationError):
    pass


class NotConfluentError(ValidationError):
    pass


class DecayError(ValidationError):
    pass


class SinPoleError(NumericalError):
    pass


class IntegerGapError(ValidationError):
    pass


class SingularNormalization(NumericalError):
    pass


class GridError(NumericalError):
    pass


class NoRepresentationError(ValidationError):
    pass


class NearSingularError(NumericalError):
    pass
