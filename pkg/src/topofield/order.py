"""Symbolic-perturbation total order on grid cells.

Ties between equal field values are broken by row-major linear index, i.e.
cell values compare as the pair (value, index). Critical-point
classification, contour extraction, and persistence all share this order so
they see one consistent strictly-monotone field.
"""

from __future__ import annotations

import numpy as np


def linear_indices(shape: tuple[int, int]) -> np.ndarray:
    """Row-major linear index of every cell, shaped like the grid."""
    h, w = shape
    return np.arange(h * w, dtype=np.int64).reshape(h, w)


def perturbed_gt(va: np.ndarray, ia: np.ndarray, vb, ib) -> np.ndarray:
    """Elementwise (va, ia) > (vb, ib) lexicographically."""
    return (va > vb) | ((va == vb) & (ia > ib))


def vertex_ranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rank every cell in the perturbed order.

    Returns ``(rank, order)`` over flattened cells: ``rank[i]`` is the
    position of cell i in the ascending perturbed order, and ``order[r]``
    is the flat cell index occupying position r (so ``order`` inverts
    ``rank``).
    """
    flat = values.ravel()
    order = np.lexsort((np.arange(flat.size), flat))
    rank = np.empty(flat.size, dtype=np.int64)
    rank[order] = np.arange(flat.size)
    return rank, order
