"""Exception vocabulary shared by all topofield modules.

Every domain failure raises a subclass of :class:`TopofieldError` carrying a
stable ``code`` string, so the CLI can map any library error to exit status 1
with a machine-readable reason.
"""

from __future__ import annotations


class TopofieldError(Exception):
    """Base class for all domain errors."""

    code = "error"


class EmptyTrainingSet(TopofieldError):
    code = "empty_training_set"


class DegenerateStats(TopofieldError):
    code = "degenerate_stats"


class OutOfRange(TopofieldError):
    code = "out_of_range"


class GridTooSmall(TopofieldError):
    code = "grid_too_small"


class ShapeMismatch(TopofieldError):
    code = "shape_mismatch"


class DimensionMismatch(TopofieldError):
    code = "dimension_mismatch"


class EssentialCountMismatch(TopofieldError):
    code = "essential_count_mismatch"


class InsufficientHistory(TopofieldError):
    code = "insufficient_history"


class MissingDate(TopofieldError):
    code = "missing_date"

    def __init__(self, dates):
        self.dates = tuple(dates)
        super().__init__("missing dates: " + ", ".join(d.isoformat() for d in self.dates))


class MissingDayOfYear(TopofieldError):
    code = "missing_day_of_year"


class EmptyScores(TopofieldError):
    code = "empty_scores"


class IdenticalFields(TopofieldError):
    code = "identical_fields"


class ZeroVariance(TopofieldError):
    code = "zero_variance"


class DegenerateSample(TopofieldError):
    code = "degenerate_sample"


class EmptySeason(TopofieldError):
    code = "empty_season"


class EmptyBin(TopofieldError):
    code = "empty_bin"

    def __init__(self, labels):
        self.labels = tuple(labels)
        super().__init__("empty bins: " + ", ".join(self.labels))


class BadMagic(TopofieldError):
    code = "bad_magic"


class TruncatedPayload(TopofieldError):
    code = "truncated_payload"


class FormatError(TopofieldError):
    code = "format_error"
