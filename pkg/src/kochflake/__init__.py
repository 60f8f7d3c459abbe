"""Koch-type snowflakes: fractal curve generators, dimension estimators,
tube volumes, heat content solvers, and the branching-process limit
experiments tying them together."""

from .errors import (
    InstabilityError,
    InvalidDomainError,
    InvalidParameterError,
    KochflakeError,
    ProfileSpanError,
    ResourceCapError,
    TooFewSamplesError,
)
from .generator import ScaleSequence, block_generator, counts, koch_curve, snowflake
from .geometry import Polyline, simplicity_check

__version__ = "0.1.0"

__all__ = [
    "KochflakeError", "InvalidParameterError", "InvalidDomainError",
    "ResourceCapError", "ProfileSpanError", "TooFewSamplesError",
    "InstabilityError",
    "ScaleSequence", "block_generator", "counts", "koch_curve", "snowflake",
    "Polyline", "simplicity_check",
    "__version__",
]
