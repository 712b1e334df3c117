"""Core gridded-field types and percentile normalization.

A :class:`ScalarField` is an immutable 2D grid of finite float64 values
(temperature in kelvin, or a dimensionless derived channel in [0, 1]).
A :class:`FieldStack` is a date-indexed sequence of 1- or 4-channel grids.
Normalization maps training-percentile bounds onto [0, 1] with clipping.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStats, EmptyTrainingSet, FormatError, OutOfRange

# Canonical grid size of the target domain; purely a convenience default.
DEFAULT_HEIGHT = 101
DEFAULT_WIDTH = 237

# Tolerances fixed by contract.
DEGENERATE_SPAN = 1e-12
DENORM_SLACK = 1e-9


def as_values(field_like) -> np.ndarray:
    """Coerce a ScalarField or array-like to a 2D float64 ndarray."""
    if isinstance(field_like, ScalarField):
        return field_like.values
    arr = np.asarray(field_like, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"expected a 2D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError("grid contains non-finite values")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScalarField:
    """A 2D gridded scalar with finite float64 values, at least 2x2."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise FormatError(f"ScalarField must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise FormatError(f"ScalarField must be at least 2x2, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise FormatError("ScalarField contains NaN or Inf")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def zeros(cls, height: int = DEFAULT_HEIGHT, width: int = DEFAULT_WIDTH) -> "ScalarField":
        return cls(np.zeros((height, width)))

    @classmethod
    def full(cls, value: float, height: int = DEFAULT_HEIGHT, width: int = DEFAULT_WIDTH) -> "ScalarField":
        return cls(np.full((height, width), float(value)))


@dataclass(frozen=True)
class FieldStack:
    """Daily grids stacked over strictly increasing dates.

    ``values`` has shape (n_dates, n_channels, height, width); n_channels is
    1 for raw/normalized temperature or 4 for structural stacks [SF, T, V, C].
    """

    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 4:
            raise FormatError(f"FieldStack values must be 4D (n, c, h, w), got {arr.shape}")
        n, c, h, w = arr.shape
        if c not in (1, 4):
            raise FormatError(f"FieldStack channel count must be 1 or 4, got {c}")
        dates = tuple(self.dates)
        if len(dates) != n:
            raise FormatError(f"{len(dates)} dates for {n} fields")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise FormatError("dates must be strictly increasing")
        if not np.all(np.isfinite(arr)):
            raise FormatError("FieldStack contains NaN or Inf")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", _frozen(arr))

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]

    def index_of(self, date: dt.date) -> int | None:
        idx = self._date_index().get(date)
        return idx

    def _date_index(self) -> dict:
        cached = getattr(self, "_idx_cache", None)
        if cached is None:
            cached = {d: i for i, d in enumerate(self.dates)}
            object.__setattr__(self, "_idx_cache", cached)
        return cached

    def field(self, i: int, channel: int = 0) -> ScalarField:
        return ScalarField(self.values[i, channel])

    def field_at(self, date: dt.date, channel: int = 0) -> ScalarField:
        idx = self.index_of(date)
        if idx is None:
            raise KeyError(date)
        return self.field(idx, channel)


@dataclass(frozen=True)
class NormStats:
    """Percentile bounds of the training data used for [0, 1] scaling."""

    p1: float
    p99: float

    def __post_init__(self):
        if not (np.isfinite(self.p1) and np.isfinite(self.p99)):
            raise DegenerateStats("non-finite percentile bounds")
        if self.p99 - self.p1 < DEGENERATE_SPAN:
            raise DegenerateStats(f"p99 - p1 = {self.p99 - self.p1!r} is below {DEGENERATE_SPAN}")

    @property
    def span(self) -> float:
        return self.p99 - self.p1


@dataclass(frozen=True)
class SplitSpec:
    """Year-disjoint train/test split."""

    train_years: frozenset[int]
    test_years: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        train = frozenset(int(y) for y in self.train_years)
        test = frozenset(int(y) for y in self.test_years)
        overlap = train & test
        if overlap:
            raise FormatError(f"train/test years overlap: {sorted(overlap)}")
        object.__setattr__(self, "train_years", train)
        object.__setattr__(self, "test_years", test)


def compute_norm_stats(stack: FieldStack, split: SplitSpec) -> NormStats:
    """1st/99th percentiles of all values from training-year dates.

    Percentiles use the linear-interpolation convention: for sorted values
    x_0..x_{n-1}, quantile q sits at fractional index (n-1)*q.
    Test-year fields are never read.
    """
    train_idx = [i for i, d in enumerate(stack.dates) if d.year in split.train_years]
    if not train_idx:
        raise EmptyTrainingSet("no dates fall in the training years")
    pooled = stack.values[train_idx].ravel()
    p1, p99 = np.percentile(pooled, [1.0, 99.0])
    if p99 - p1 < DEGENERATE_SPAN:
        raise DegenerateStats(f"training values span {p99 - p1!r}")
    return NormStats(float(p1), float(p99))


def normalize(field: ScalarField, stats: NormStats) -> ScalarField:
    """Affine map of [p1, p99] onto [0, 1], clipped to that range."""
    out = (field.values - stats.p1) / stats.span
    return ScalarField(np.clip(out, 0.0, 1.0))


def denormalize(field: ScalarField, stats: NormStats) -> ScalarField:
    """Inverse of :func:`normalize` for reporting physical-unit errors."""
    vals = field.values
    if vals.min() < -DENORM_SLACK or vals.max() > 1.0 + DENORM_SLACK:
        raise OutOfRange(
            f"values in [{vals.min()!r}, {vals.max()!r}] exceed [0, 1] by more than {DENORM_SLACK}"
        )
    return ScalarField(vals * stats.span + stats.p1)


def normalize_stack(stack: FieldStack, stats: NormStats) -> FieldStack:
    """Normalize every channel of every date in a stack."""
    out = np.clip((stack.values - stats.p1) / stats.span, 0.0, 1.0)
    return FieldStack(stack.dates, out)
