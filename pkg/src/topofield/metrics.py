"""Forecast-verification metrics and seasonal / error-bin stratification.

RMSE and the anomaly correlation are computed on physical (kelvin) fields;
PSNR and SSIM operate in normalized [0, 1] space. Distribution agreement
uses Gaussian kernel density estimates with a Silverman-style bandwidth.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    EmptyBin,
    EmptySeason,
    FormatError,
    IdenticalFields,
    ShapeMismatch,
    ZeroVariance,
)
from .field import as_values

SEASONS = ("DJF", "MAM", "JJA", "SON")
_SEASON_OF_MONTH = {
    12: "DJF", 1: "DJF", 2: "DJF",
    3: "MAM", 4: "MAM", 5: "MAM",
    6: "JJA", 7: "JJA", 8: "JJA",
    9: "SON", 10: "SON", 11: "SON",
}

KDE_GRID_POINTS = 2048
KDE_MARGIN_BANDWIDTHS = 3.0


def season_of(date: dt.date) -> str:
    """Meteorological season of a date (Dec-Feb -> DJF, and so on)."""
    return _SEASON_OF_MONTH[date.month]


@dataclass(frozen=True)
class EvalRecord:
    """Per-(date, lead time) metric bundle."""

    target_date: dt.date
    tau: int
    rmse: float
    psnr: float
    ssim: float
    acc: float
    season: str
    overlap: float | None = None

    def __post_init__(self):
        if self.season != season_of(self.target_date):
            raise FormatError(
                f"season {self.season} inconsistent with {self.target_date} "
                f"({season_of(self.target_date)})"
            )
        if not -1.0 - 1e-9 <= self.acc <= 1.0 + 1e-9:
            raise FormatError(f"correlation {self.acc} outside [-1, 1]")


@dataclass(frozen=True)
class BinSpec:
    """Error-bin edges in kelvin; default four bins 3-, 3-4, 4-5, 5+."""

    edges: tuple[float, ...] = (3.0, 4.0, 5.0)

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise FormatError("bin edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @property
    def labels(self) -> tuple[str, ...]:
        first = f"{_trim(self.edges[0])}-"
        mids = tuple(f"{_trim(a)}-{_trim(b)}" for a, b in zip(self.edges, self.edges[1:]))
        last = f"{_trim(self.edges[-1])}+"
        return (first,) + mids + (last,)

    def assign(self, x: np.ndarray) -> np.ndarray:
        """Bin index per value; intervals are left-closed."""
        return np.searchsorted(np.asarray(self.edges), x, side="right")


def _trim(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class StratRow:
    """Per-bin median fusion weights for one season."""

    season: str | None
    medians: tuple[float | None, ...]
    counts: tuple[int, ...]
    delta: float


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(((p - t) ** 2).mean()))


def psnr(pred, truth) -> float:
    """10*log10(1/MSE) for unit dynamic range; identical fields are an error."""
    p, t = _pair(pred, truth)
    mse = float(((p - t) ** 2).mean())
    if mse == 0.0:
        raise IdenticalFields("PSNR is infinite for identical fields")
    return float(10.0 * np.log10(1.0 / mse))


def acc(pred, truth, clim) -> float:
    """Spatial anomaly correlation, pooling all grid cells."""
    p, t = _pair(pred, truth)
    c = as_values(clim)
    if c.shape != p.shape:
        raise ShapeMismatch(f"climatology shape {c.shape} differs from {p.shape}")
    pa = (p - c).ravel()
    ta = (t - c).ravel()
    pa = pa - pa.mean()
    ta = ta - ta.mean()
    denom = np.sqrt((pa**2).sum() * (ta**2).sum())
    if denom == 0.0:
        raise ZeroVariance("an anomaly field is constant")
    return float(np.clip((pa * ta).sum() / denom, -1.0, 1.0))


def _pair(a, b):
    av, bv = as_values(a), as_values(b)
    if av.shape != bv.shape:
        raise ShapeMismatch(f"shapes {av.shape} and {bv.shape} differ")
    return av, bv


# ---------------------------------------------------------------------------
# Kernel density overlap


def _bandwidth(samples: np.ndarray) -> float:
    """Silverman-style rule: 0.9 * min(sd, IQR/1.34) * n^(-1/5).

    Falls back to the sd-only rule when the IQR collapses to zero; a zero
    sd is degenerate.
    """
    sd = float(samples.std())
    if sd == 0.0:
        raise DegenerateSample("sample standard deviation is zero")
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return 0.9 * spread * samples.size ** (-0.2)


def _kde(samples: np.ndarray, h: float, grid: np.ndarray) -> np.ndarray:
    z = (grid[:, None] - samples[None, :]) / h
    return np.exp(-0.5 * z * z).sum(axis=1) / (samples.size * h * math.sqrt(2.0 * math.pi))


def _as_samples(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DegenerateSample("empty sample set")
    if not np.all(np.isfinite(arr)):
        raise FormatError("samples contain non-finite values")
    return arr


def kde_overlap(pred_samples, truth_samples) -> float:
    """Integral of min(p, q) between the two Gaussian KDEs.

    Trapezoidal quadrature on 2048 points spanning the pooled range plus a
    three-bandwidth margin.
    """
    p = _as_samples(pred_samples)
    q = _as_samples(truth_samples)
    hp, hq = _bandwidth(p), _bandwidth(q)
    h = max(hp, hq)
    lo = min(p.min(), q.min()) - KDE_MARGIN_BANDWIDTHS * h
    hi = max(p.max(), q.max()) + KDE_MARGIN_BANDWIDTHS * h
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    dens_p = _kde(p, hp, grid)
    dens_q = _kde(q, hq, grid)
    return float(np.trapezoid(np.minimum(dens_p, dens_q), grid))


def tail_overlap(pred_samples, truth_samples, side: str) -> float:
    """Tail-restricted overlap, normalized by the truth's tail mass.

    Thresholds come from the truth sample's 5th/95th percentiles; the
    statistic is the integral of min(p, q) over the tail divided by the
    integral of the truth density q over the same region.
    """
    if side not in ("below_p5", "above_p95"):
        raise FormatError(f"side must be 'below_p5' or 'above_p95', got {side!r}")
    p = _as_samples(pred_samples)
    q = _as_samples(truth_samples)
    hp, hq = _bandwidth(p), _bandwidth(q)
    h = max(hp, hq)
    lo = min(p.min(), q.min()) - KDE_MARGIN_BANDWIDTHS * h
    hi = max(p.max(), q.max()) + KDE_MARGIN_BANDWIDTHS * h
    if side == "below_p5":
        bound = float(np.percentile(q, 5.0))
        grid = np.linspace(lo, bound, KDE_GRID_POINTS)
    else:
        bound = float(np.percentile(q, 95.0))
        grid = np.linspace(bound, hi, KDE_GRID_POINTS)
    dens_p = _kde(p, hp, grid)
    dens_q = _kde(q, hq, grid)
    tail_mass = float(np.trapezoid(dens_q, grid))
    if tail_mass == 0.0:
        raise DegenerateSample("truth tail carries no density mass")
    return float(np.trapezoid(np.minimum(dens_p, dens_q), grid) / tail_mass)


# ---------------------------------------------------------------------------
# Stratification


def seasonal_summary(records) -> dict[str, dict[str, float]]:
    """Per-season mean/std RMSE, mean ACC, and mean overlap where present.

    Standard deviations are population deviations. Seasons are never
    pooled; a season absent from the records is absent from the result.
    """
    buckets: dict[str, list[EvalRecord]] = {}
    for r in records:
        buckets.setdefault(r.season, []).append(r)
    if not buckets:
        raise EmptySeason("no records")
    out: dict[str, dict[str, float]] = {}
    for season in SEASONS:
        if season not in buckets:
            continue
        rs = buckets[season]
        rmses = np.array([r.rmse for r in rs])
        overlaps = [r.overlap for r in rs if r.overlap is not None]
        out[season] = {
            "n": len(rs),
            "mean_rmse": float(rmses.mean()),
            "std_rmse": float(rmses.std()),
            "mean_acc": float(np.mean([r.acc for r in rs])),
            "mean_overlap": float(np.mean(overlaps)) if overlaps else math.nan,
        }
    return out


def _lower_median(values: np.ndarray) -> float:
    """Median with the lower of the two middle elements for even counts."""
    s = np.sort(values)
    return float(s[(s.size - 1) // 2])


def lambda_bin_analysis(
    lambda_field, rmse_field, bins: BinSpec = BinSpec(), season: str | None = None
) -> StratRow:
    """Median fusion weight per error bin, plus the end-bin separation.

    Cells are assigned to left-closed bins by their error value; medians
    use the lower-median convention. The separation is
    median(last bin) - median(first bin) and needs both end bins populated.
    """
    lam, err = _pair(lambda_field, rmse_field)
    idx = bins.assign(err.ravel())
    lam_flat = lam.ravel()
    n_bins = len(bins.edges) + 1
    medians: list[float | None] = []
    counts: list[int] = []
    for b in range(n_bins):
        sel = lam_flat[idx == b]
        counts.append(int(sel.size))
        medians.append(_lower_median(sel) if sel.size else None)
    labels = bins.labels
    empty_ends = [labels[i] for i in (0, n_bins - 1) if counts[i] == 0]
    if empty_ends:
        raise EmptyBin(empty_ends)
    delta = medians[-1] - medians[0]
    return StratRow(season, tuple(medians), tuple(counts), float(delta))


def lead_time_curves(records) -> dict[tuple[str, int], float]:
    """Mean RMSE keyed by (season, lead time)."""
    sums: dict[tuple[str, int], float] = {}
    counts: dict[tuple[str, int], int] = {}
    for r in records:
        key = (r.season, r.tau)
        sums[key] = sums.get(key, 0.0) + r.rmse
        counts[key] = counts.get(key, 0) + 1
    return {key: sums[key] / counts[key] for key in sums}


def make_eval_record(
    pred_norm,
    truth_norm,
    clim_norm,
    stats,
    target_date: dt.date,
    tau: int,
    with_overlap: bool = False,
) -> EvalRecord:
    """Evaluate one normalized prediction against truth and climatology.

    RMSE and ACC are computed after mapping all three fields back to
    kelvin with ``stats``; PSNR and SSIM stay in normalized space. An
    identical prediction reports infinite PSNR.
    """
    from .field import ScalarField, denormalize
    from .losses import ssim as ssim_fn

    pred_k = denormalize(ScalarField(as_values(pred_norm)), stats).values
    truth_k = denormalize(ScalarField(as_values(truth_norm)), stats).values
    clim_k = denormalize(ScalarField(as_values(clim_norm)), stats).values
    try:
        psnr_val = psnr(pred_norm, truth_norm)
    except IdenticalFields:
        psnr_val = math.inf
    overlap = kde_overlap(pred_k.ravel(), truth_k.ravel()) if with_overlap else None
    return EvalRecord(
        target_date=target_date,
        tau=tau,
        rmse=rmse(pred_k, truth_k),
        psnr=psnr_val,
        ssim=ssim_fn(pred_norm, truth_norm),
        acc=acc(pred_k, truth_k, clim_k),
        season=season_of(target_date),
        overlap=overlap,
    )
