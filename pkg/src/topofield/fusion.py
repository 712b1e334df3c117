"""Spatially adaptive fusion arithmetic and fusion-weight regularizers.

The blend weight map lives in [0, 1]: 1 selects the calendar-aligned
branch, 0 the recent-dynamics branch. Only the finest-resolution level
enters any computation; coarser levels are carried for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GridTooSmall, ShapeMismatch
from .field import ScalarField, as_values
from .temporal import TAU_MAX, TAU_MIN, LeadTime


@dataclass(frozen=True)
class LambdaMap:
    """Blend-weight map(s), finest level first, all values in [0, 1]."""

    levels: tuple[ScalarField, ...]

    def __post_init__(self):
        if not self.levels:
            raise FormatError("a lambda map needs at least the finest level")
        levels = tuple(self.levels)
        for lv in levels:
            if lv.values.min() < 0.0 or lv.values.max() > 1.0:
                raise FormatError("lambda values must lie in [0, 1]")
        object.__setattr__(self, "levels", levels)

    @property
    def level1(self) -> ScalarField:
        return self.levels[0]

    @classmethod
    def of(cls, field_like) -> "LambdaMap":
        return cls((ScalarField(as_values(field_like)),))


@dataclass(frozen=True)
class RegWeights:
    """Nonnegative weights for the smoothness/entropy/mean-balance terms."""

    eta1: float = 0.0
    eta2: float = 0.0
    eta3: float = 0.0
    lambda_target: float = 0.5

    def __post_init__(self):
        if min(self.eta1, self.eta2, self.eta3) < 0:
            raise FormatError("regularizer weights must be nonnegative")
        if not 0.0 <= self.lambda_target <= 1.0:
            raise FormatError("lambda_target must lie in [0, 1]")


@dataclass(frozen=True)
class PositionalEncoding:
    lat_channel: ScalarField
    lon_channel: ScalarField


@dataclass(frozen=True)
class LeadMap:
    """Constant conditioning map (tau - 30) / 60 broadcast over the grid."""

    value: float
    field: ScalarField


def fuse(inter: ScalarField, intra: ScalarField, lam: LambdaMap) -> ScalarField:
    """Pointwise convex blend: lam*inter + (1 - lam)*intra."""
    a = as_values(inter)
    b = as_values(intra)
    l1 = lam.level1.values
    if a.shape != b.shape or a.shape != l1.shape:
        raise ShapeMismatch(f"shapes {a.shape}, {b.shape}, {l1.shape} differ")
    return ScalarField(l1 * a + (1.0 - l1) * b)


def apply_residual(fused: ScalarField, delta: ScalarField) -> ScalarField:
    """Additive local correction; clamping is a reporting-time option."""
    a = as_values(fused)
    d = as_values(delta)
    if a.shape != d.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {d.shape} differ")
    return ScalarField(a + d)


def tv(lam_level1) -> float:
    """Anisotropic total variation: pooled mean of forward differences."""
    vals = as_values(lam_level1)
    h, w = vals.shape
    if h < 2 or w < 2:
        raise GridTooSmall(f"total variation needs at least 2x2, got {h}x{w}")
    d_col = np.abs(vals[:, 1:] - vals[:, :-1])
    d_row = np.abs(vals[1:, :] - vals[:-1, :])
    return float((d_col.sum() + d_row.sum()) / (d_col.size + d_row.size))


def entropy_term(lam_level1) -> float:
    """Mean binary entropy of the weights, natural log, 0*ln(0) = 0.

    Returned as the (nonnegative) entropy itself; the regularizer consumes
    its negation so that minimizing drives weights away from saturation.
    """
    vals = as_values(lam_level1)
    if vals.min() < 0.0 or vals.max() > 1.0:
        raise FormatError("entropy is defined for weights in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(vals > 0.0, vals * np.log(vals), 0.0)
        h -= np.where(vals < 1.0, (1.0 - vals) * np.log(1.0 - vals), 0.0)
    return float(h.mean())


def mean_balance(lam_level1, lambda_target: float) -> float:
    """(mean weight - target)^2."""
    vals = as_values(lam_level1)
    return float((vals.mean() - lambda_target) ** 2)


def l_reg(lam: LambdaMap, w: RegWeights) -> float:
    """Composite fusion-weight regularizer on the finest level.

    eta1*TV - eta2*entropy + eta3*(mean - target)^2; the entropy term is
    subtracted so that minimizing the total rewards non-saturated weights.
    """
    l1 = lam.level1
    return (
        w.eta1 * tv(l1)
        - w.eta2 * entropy_term(l1)
        + w.eta3 * mean_balance(l1, w.lambda_target)
    )


def positional_encoding(height: int, width: int) -> PositionalEncoding:
    """Two rank-1 channels: row index / (h-1) and column index / (w-1)."""
    if height < 2 or width < 2:
        raise GridTooSmall(f"positional encoding needs at least 2x2, got {height}x{width}")
    rows = np.repeat(np.arange(height, dtype=np.float64)[:, None] / (height - 1), width, axis=1)
    cols = np.repeat(np.arange(width, dtype=np.float64)[None, :] / (width - 1), height, axis=0)
    return PositionalEncoding(ScalarField(rows), ScalarField(cols))


def lead_map(tau: LeadTime, height: int, width: int) -> LeadMap:
    """Lead time mapped onto [0, 1] over the 30..90-day window."""
    value = (tau.tau - TAU_MIN) / (TAU_MAX - TAU_MIN)
    return LeadMap(value, ScalarField(np.full((height, width), value)))
