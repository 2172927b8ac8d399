"""Exception hierarchy shared by every module of the package."""


class RFFRCError(Exception):
    """Base class for all errors raised by rffrc."""


class InvalidParameterError(RFFRCError, ValueError):
    """A parameter lies outside its admissible domain."""


class DimensionMismatchError(RFFRCError, ValueError):
    """An array does not have the shape an operation expects."""


class LengthMismatchError(DimensionMismatchError):
    """Two series that must be aligned have different lengths."""


class InsufficientLengthError(RFFRCError, ValueError):
    """A trajectory is too short for the requested lag order."""


class DegenerateRangeError(RFFRCError, ValueError):
    """The true series is constant, so a range-normalised error is undefined."""


class SingularityError(RFFRCError, ArithmeticError):
    """A map hit (or came within tolerance of) a pole."""


class NonFiniteStateError(RFFRCError, FloatingPointError):
    """A simulated state overflowed or became NaN."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalFailureError(RFFRCError, ArithmeticError):
    """A factorisation failed or a solution violated its residual bound."""


class ConfigError(RFFRCError, ValueError):
    """An experiment configuration is malformed."""


class FormatVersionError(RFFRCError, ValueError):
    """A saved artefact was written by an incompatible format version."""


class CorruptFileError(RFFRCError, ValueError):
    """A saved artefact could not be parsed."""
