"""
Error kinds raised by the precoding library.

Each class also derives from the matching builtin so callers that only know
about ValueError / IndexError keep working.
"""


class PrecodingError(Exception):
    """Base class for every error raised by this project."""


class InvalidArgumentError(PrecodingError, ValueError):
    """An input violates a documented precondition (shape, norm, sign...)."""


class SubcarrierIndexError(PrecodingError, IndexError):
    """A subcarrier or RF-chain index is outside its 1-based range."""


class SingularProblemError(PrecodingError, ArithmeticError):
    """The phase-domain quadratic is not strictly convex (B = 0 or K = 1)."""


class VerificationError(PrecodingError):
    """A numerical cross-check exceeded its tolerance."""


class ScenarioFileError(InvalidArgumentError):
    """A scenario file or request body could not be parsed."""
