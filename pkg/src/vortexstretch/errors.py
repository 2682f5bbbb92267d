"""Exception hierarchy shared by all subpackages."""


class VortexError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(VortexError, ValueError):
    """An argument violates a documented precondition (e.g. ``h <= 0``)."""


class ParseError(VortexError, ValueError):
    """Malformed field expression.

    Attributes
    ----------
    position : int
        Zero-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        self.reason = message
        super().__init__(f"{message} at offset {position}")


class DomainError(VortexError, ArithmeticError):
    """Evaluation produced a non-finite value (log of a negative number, ...)."""

    def __init__(self, message: str, subexpression: str | None = None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


class StagnationPoint(VortexError, ArithmeticError):
    """Speed below the stagnation tolerance; arc length and frame are undefined."""

    def __init__(self, x=None, speed: float | None = None):
        self.x = x
        self.speed = speed
        super().__init__("stagnation point: |u| below tolerance")


class StepUnderflow(VortexError, ArithmeticError):
    """The adaptive integrator's step size collapsed."""


class NoPressureError(VortexError, ValueError):
    """The field carries no known pressure."""


class InternalError(VortexError, RuntimeError):
    """An internal consistency check failed (e.g. non-monotone arc length)."""
