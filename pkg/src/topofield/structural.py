"""Structural-channel extraction: critical points and saddle-level contours.

Every interior cell is classified against its 8-neighbor ring under the
perturbed order (so all comparisons are strict). Saddle-level iso-contours
are rasterized with marching squares into a binary pixel mask. The four
channels [SF, T, V, C] together form the structural representation of one
daily field; they depend on that field only.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GridTooSmall, OutOfRange
from .field import FieldStack, ScalarField, as_values
from .order import linear_indices, perturbed_gt

# Stored T-channel codes, scaled into [0, 1] like every other channel.
T_REGULAR = 0.0
T_MAXIMUM = 1.0 / 3.0
T_MINIMUM = 2.0 / 3.0
T_SADDLE = 1.0

# Ring walk order: N, NE, E, SE, S, SW, W, NW as (drow, dcol).
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


class CriticalKind(enum.Enum):
    MAXIMUM = "maximum"
    MINIMUM = "minimum"
    SADDLE = "saddle"


@dataclass(frozen=True)
class CriticalPoint:
    row: int
    col: int
    kind: CriticalKind
    value: float


@dataclass(frozen=True)
class StructuralChannels:
    """Critical-point type map T, value map V, and contour mask C."""

    t: ScalarField
    v: ScalarField
    c: ScalarField

    def __post_init__(self):
        if not (self.t.shape == self.v.shape == self.c.shape):
            raise FormatError("structural channels must share one grid shape")
        # tolerance admits float32 storage of the thirds
        codes = np.array([T_REGULAR, T_MAXIMUM, T_MINIMUM, T_SADDLE])
        dist = np.abs(self.t.values[..., None] - codes).min(axis=-1)
        if dist.max() > 1e-6:
            raise FormatError("T channel contains values outside the code set")
        if not set(np.unique(self.c.values)) <= {0.0, 1.0}:
            raise FormatError("C channel must be a {0,1} mask")


@dataclass(frozen=True)
class MultiChannelField:
    """The 4-channel structural tensor for one date: [SF, T, V, C]."""

    sf: ScalarField
    channels: StructuralChannels

    def __post_init__(self):
        if self.sf.shape != self.channels.t.shape:
            raise FormatError("SF and structural channels must share one grid shape")

    def to_array(self) -> np.ndarray:
        return np.stack(
            [self.sf.values, self.channels.t.values, self.channels.v.values, self.channels.c.values]
        )


def classify_critical_points(field) -> list[CriticalPoint]:
    """Classify every interior cell by 8-ring sign changes.

    Walking the ring cyclically and recording sign(neighbor - center) under
    the perturbed order: 0 changes with an all-lower ring is a maximum, 0
    with an all-higher ring a minimum, and 4 or more changes a saddle
    (multi-saddles included). 2 changes is regular; boundary cells are
    never classified.
    """
    values = as_values(field)
    h, w = values.shape
    if h < 3 or w < 3:
        raise GridTooSmall(f"classification needs at least 3x3, got {h}x{w}")
    idx = linear_indices((h, w))
    center_v = values[1:-1, 1:-1]
    center_i = idx[1:-1, 1:-1]
    above = np.empty((8, h - 2, w - 2), dtype=bool)
    for k, (dr, dc) in enumerate(_RING):
        nb_v = values[1 + dr : h - 1 + dr, 1 + dc : w - 1 + dc]
        nb_i = idx[1 + dr : h - 1 + dr, 1 + dc : w - 1 + dc]
        above[k] = perturbed_gt(nb_v, nb_i, center_v, center_i)
    changes = (above != np.roll(above, -1, axis=0)).sum(axis=0)
    n_above = above.sum(axis=0)
    is_max = (changes == 0) & (n_above == 0)
    is_min = (changes == 0) & (n_above == 8)
    is_saddle = changes >= 4

    points: list[CriticalPoint] = []
    for kind, mask in (
        (CriticalKind.MAXIMUM, is_max),
        (CriticalKind.MINIMUM, is_min),
        (CriticalKind.SADDLE, is_saddle),
    ):
        for r, c in zip(*np.nonzero(mask)):
            points.append(CriticalPoint(int(r) + 1, int(c) + 1, kind, float(values[r + 1, c + 1])))
    points.sort(key=lambda p: (p.row, p.col))
    return points


def extract_saddle_contours(field, saddles: list[CriticalPoint]) -> ScalarField:
    """Binary mask of pixels adjacent to saddle-level iso-line crossings.

    For each saddle, a grid edge is crossed when the saddle's perturbed
    value lies strictly between the perturbed values of the edge's two
    endpoint pixels; both endpoints of every crossed edge are marked.
    Masks from multiple saddles are OR-ed.
    """
    values = as_values(field)
    h, w = values.shape
    idx = linear_indices((h, w))
    mask = np.zeros((h, w), dtype=bool)
    for s in saddles:
        if s.kind is not CriticalKind.SADDLE:
            raise FormatError(f"non-saddle point ({s.row}, {s.col}) passed to contour extraction")
        if not (0 <= s.row < h and 0 <= s.col < w):
            raise FormatError(f"saddle ({s.row}, {s.col}) lies outside the {h}x{w} grid")
        level_v = values[s.row, s.col]
        level_i = idx[s.row, s.col]
        above = perturbed_gt(values, idx, level_v, level_i)
        below = ~above
        below[s.row, s.col] = False  # the saddle pixel sits exactly at the level
        cross_h = (above[:, :-1] & below[:, 1:]) | (below[:, :-1] & above[:, 1:])
        cross_v = (above[:-1, :] & below[1:, :]) | (below[:-1, :] & above[1:, :])
        mask[:, :-1] |= cross_h
        mask[:, 1:] |= cross_h
        mask[:-1, :] |= cross_v
        mask[1:, :] |= cross_v
    return ScalarField(mask.astype(np.float64))


def build_structural_channels(field: ScalarField) -> MultiChannelField:
    """Assemble the 4-channel representation of one normalized field."""
    values = as_values(field)
    if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
        raise OutOfRange("structural channels are built on [0, 1]-normalized fields")
    points = classify_critical_points(values)
    t = np.zeros_like(values)
    v = np.zeros_like(values)
    code = {
        CriticalKind.MAXIMUM: T_MAXIMUM,
        CriticalKind.MINIMUM: T_MINIMUM,
        CriticalKind.SADDLE: T_SADDLE,
    }
    for p in points:
        t[p.row, p.col] = code[p.kind]
        v[p.row, p.col] = p.value
    saddles = [p for p in points if p.kind is CriticalKind.SADDLE]
    c = extract_saddle_contours(values, saddles)
    sf = field if isinstance(field, ScalarField) else ScalarField(values)
    return MultiChannelField(sf, StructuralChannels(ScalarField(t), ScalarField(v), c))


def build_structural_stack(stack: FieldStack, threads: int | None = None) -> FieldStack:
    """Expand a 1-channel normalized stack into the 4-channel [SF, T, V, C] stack."""
    if stack.channels != 1:
        raise FormatError(f"expected a 1-channel stack, got {stack.channels}")

    def one(i: int) -> np.ndarray:
        return build_structural_channels(stack.field(i)).to_array()

    n = len(stack)
    if threads is not None and threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            arrays = list(pool.map(one, range(n)))
    else:
        arrays = [one(i) for i in range(n)]
    return FieldStack(stack.dates, np.stack(arrays) if arrays else np.zeros((0, 4, stack.height, stack.width)))
