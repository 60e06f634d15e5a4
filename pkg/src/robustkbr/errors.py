"""Exception types shared across the package."""


class RobustKBRError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RobustKBRError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailureError(RobustKBRError, ArithmeticError):
    """A factorization or iteration broke down (singular system, NaN, ...)."""


class DataParseError(RobustKBRError, ValueError):
    """Input data could not be parsed.

    ``row`` and ``column`` are 1-based positions in the source file when known.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
