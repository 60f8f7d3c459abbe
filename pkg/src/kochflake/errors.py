"""Exception types shared across the package."""


class KochflakeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(KochflakeError, ValueError):
    """A parameter is outside its documented domain."""


class InvalidDomainError(KochflakeError, ValueError):
    """A polygon is not usable (non-simple, degenerate, open where closed needed)."""


class ResourceCapError(KochflakeError, RuntimeError):
    """A configured memory / population cap would be exceeded."""


class InstabilityError(KochflakeError, RuntimeError):
    """A time-stepping scheme left its stable range."""


class ProfileSpanError(KochflakeError, ValueError):
    """A sampled profile does not cover the scale range an operation needs."""


class TooFewSamplesError(KochflakeError, ValueError):
    """A profile has too few samples for the requested estimate."""
