"""Exception hierarchy shared across the package.

Every error raised deliberately by this package derives from
:class:`AviSolveError`, so callers can catch a single base class at API
boundaries (the command line driver does exactly that).
"""

__all__ = [
    "AviSolveError",
    "DimensionMismatch",
    "NotPositiveDefinite",
    "Singular",
    "Infeasible",
    "CycleLimit",
    "AssumptionViolated",
    "TooLarge",
    "NoCertificate",
    "ParseError",
]


class AviSolveError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(AviSolveError):
    """Array shapes passed to an operation are inconsistent."""


class NotPositiveDefinite(AviSolveError):
    """A matrix required to be symmetric positive definite is not."""


class Singular(AviSolveError):
    """A square system is singular to working precision."""


class Infeasible(AviSolveError):
    """The constraint set of a quadratic program is empty."""


class CycleLimit(AviSolveError):
    """The active-set method exceeded its working-set change budget."""


class AssumptionViolated(NotPositiveDefinite):
    """The symmetric part of the problem matrix is not positive definite.

    Subclasses NotPositiveDefinite so generic handlers for failed
    positive-definite factorizations also catch problem-level violations.
    """


class TooLarge(AviSolveError):
    """The problem is beyond the size limit of the brute-force oracle."""


class NoCertificate(AviSolveError):
    """The brute-force oracle found no certified solution candidate."""


class ParseError(AviSolveError):
    """A problem or reference file could not be parsed."""
