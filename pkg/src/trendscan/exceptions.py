"""Exception types raised by trendscan.

Everything derives from TrendscanError (a ValueError) so callers can catch
broadly; the subclasses exist because tests and the CLI distinguish them.
"""

from __future__ import annotations

__all__ = [
    "TrendscanError",
    "PanelValidationError",
    "GridError",
    "DomainError",
    "DegenerateSupportError",
    "SingularDesignError",
    "DegenerateVarianceError",
    "NonstationaryFitError",
    "ConfigError",
    "CsvFormatError",
    "MissingDataError",
]


class TrendscanError(ValueError):
    """Base class for all trendscan errors."""


class PanelValidationError(TrendscanError):
    """Panel data violates a structural requirement (lengths, dims, finiteness)."""


class GridError(TrendscanError):
    """A location-scale grid is empty or structurally invalid."""


class DomainError(TrendscanError):
    """A scalar parameter lies outside its mathematical domain."""


class DegenerateSupportError(TrendscanError):
    """A kernel window contains too few points to define weights."""


class SingularDesignError(TrendscanError):
    """The differenced covariate design is numerically singular."""


class DegenerateVarianceError(TrendscanError):
    """A long-run variance estimate is zero or negative."""


class NonstationaryFitError(TrendscanError):
    """An autoregressive fit lies on or outside the stationarity boundary."""


class ConfigError(TrendscanError):
    """A configuration object or argument combination is invalid."""


class CsvFormatError(TrendscanError):
    """A CSV input file cannot be parsed; message carries the line number."""


class MissingDataError(TrendscanError):
    """Missing observations violate the interpolation policy."""
