"""Exception hierarchy for tailconc.

Every error raised deliberately by this package derives from
:class:`TailconcError`, so callers can catch one base type. Domain
violations additionally derive from :class:`ValueError` to cooperate with
generic validation code.
"""

from __future__ import annotations

__all__ = [
    "TailconcError",
    "DomainError",
    "PoleError",
    "BoundaryCaseError",
    "PrecisionError",
    "GridRangeError",
    "ResourceLimitError",
]


class TailconcError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TailconcError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """A special function was evaluated at one of its poles."""


class BoundaryCaseError(TailconcError):
    """A regime-specific formula was requested on the regime boundary.

    The boundary has its own expansion; use the full second-order
    approximation entry point instead of the single-regime coefficient.
    """


class PrecisionError(TailconcError):
    """A numerical routine could not certify its accuracy target."""


class GridRangeError(DomainError):
    """A query lies outside the range covered by a numerical grid."""


class ResourceLimitError(TailconcError):
    """A computation would exceed the configured memory budget."""
