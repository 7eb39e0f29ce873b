"""Exception hierarchy.

Every error carries the name of the public operation that raised it so that
failures deep inside a nested derivation still point at the user's call.
"""


class DiffError(Exception):
    """Base class for all diffkit errors."""

    def __init__(self, message, operation=None):
        self.operation = operation
        if operation:
            message = f"{operation}: {message}"
        super().__init__(message)


class ShapeError(DiffError, ValueError):
    """Arguments, seeds or outputs have the wrong kind or length."""


class ArityError(ShapeError):
    """The operation supports a different number of arguments."""


class ConfigurationError(DiffError):
    """A backend was registered or composed incorrectly, or an operation
    outside the supported scalar set was used on a carrier."""


class NumericalError(DiffError, ArithmeticError):
    """A non-finite intermediate or a singular linear system was met."""


class ConsistencyError(DiffError):
    """A primitive returned results whose shapes disagree across seeds."""


class UsageError(DiffError):
    """An object was used after it stopped being valid (e.g. a released tape)."""
