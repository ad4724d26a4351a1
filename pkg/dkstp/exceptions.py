"""
Error hierarchy for the DK-STP toolkit.

Validation failures subclass :class:`ValueError` so callers that only know
about builtin exceptions keep working.
"""

from __future__ import annotations


class DkStpError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(DkStpError, ValueError):
    """Shape, divisibility or size-guard violation."""


class CombinatorialLimitError(DimensionError):
    """An exhaustive enumeration would exceed its configured guard."""


class RankDeficientError(DkStpError, ValueError):
    """A sensing matrix does not have the rank a solver requires."""


class RecoveryError(DkStpError, RuntimeError):
    """No candidate support explains the measurements."""


class FormatError(DkStpError, ValueError):
    """Malformed PGM image or packet file."""


class InvariantViolation(DkStpError, RuntimeError):
    """A proven inequality failed numerically; indicates a programming error."""
