"""Exception types shared across the package."""


class HamflowError(Exception):
    """Base class for all package-specific errors."""


class FactorizationFailure(HamflowError):
    """A covariance matrix could not be factorized even after jitter."""


class OutOfRange(HamflowError, ValueError):
    """A time or coordinate argument lies outside its valid domain."""


class NotAutonomous(HamflowError):
    """An operation requiring time-independent Hamiltonians received one that is not."""


class NonFinite(HamflowError):
    """A numerical state left the finite floating-point range."""


class RefinementOverflow(HamflowError):
    """Curve refinement exceeded the maximum subdivision depth."""


class DegenerateOverlap(HamflowError):
    """A curve lies (mostly) inside the level set it is being intersected with."""


class Unsupported(HamflowError):
    """The requested operation is not defined for this kernel or configuration."""


class ParseError(HamflowError):
    """A configuration document could not be parsed.

    Carries the offending line number when available.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(HamflowError):
    """A configuration value is outside its documented range.

    Carries the name of the offending field.
    """

    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)
