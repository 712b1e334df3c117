"""Sublevel-set cubical persistence on 2D grids and the bottleneck distance.

The complex is the V-construction: pixels are vertices, 4-neighbors are
joined by edges, and unit squares are filled when all four corners exist.
A cell enters the filtration at the perturbed value of its maximal vertex,
so the filtration is a strict total order (ties broken by linear index).

H1 pairs come from boundary-matrix reduction over Z2 of the square/edge
matrix; H0 uses the equivalent union-find sweep of the sorted vertex/edge
sequence. A pure-reduction route for both dimensions (with the clearing
optimization) is exposed as :func:`sublevel_persistence_reduction`; the two
must agree and are tested against each other.

Pairs whose birth and death cells share the same maximal vertex are
instantaneous in the perturbed filtration and never appear. Pairs with zero
*unperturbed* persistence (distinct vertices, equal field values) are
retained; callers filter them explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EssentialCountMismatch, FormatError
from .field import as_values
from .order import vertex_ranks

INF = math.inf

# Recorded in machine-readable outputs for provenance.
FILTRATION_CONFIG = {
    "construction": "V",
    "cell_value": "max_vertex",
    "tie_break": "linear_index",
    "direction": "sublevel",
}


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) intervals for one homology dimension."""

    dim: int
    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.dim not in (0, 1):
            raise DimensionMismatch(f"homology dimension must be 0 or 1, got {self.dim}")
        clean = []
        for b, d in self.pairs:
            b = float(b)
            d = float(d)
            if not d >= b:
                raise FormatError(f"death {d!r} precedes birth {b!r}")
            clean.append((b, d))
        clean.sort(key=lambda p: (p[0], p[1]))
        object.__setattr__(self, "pairs", tuple(clean))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def finite_pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple(p for p in self.pairs if math.isfinite(p[1]))

    @property
    def essential_births(self) -> tuple[float, ...]:
        return tuple(b for b, d in self.pairs if math.isinf(d))


# ---------------------------------------------------------------------------
# Complex construction


def _grid_complex(values: np.ndarray):
    """Vertex ranks plus filtration-sorted edges and squares.

    Edges and squares are indexed by their position in the sorted order;
    positions double as boundary-matrix row indices.
    """
    h, w = values.shape
    rank2 = vertex_ranks(values)
    rank, order = rank2
    vals_by_rank = values.ravel()[order]
    rank = rank.reshape(h, w)

    # Edge endpoints as (h, w)-grid ranks: horizontal then vertical.
    e_rank_parts = []
    if w > 1:
        e_rank_parts.append(np.maximum(rank[:, :-1], rank[:, 1:]).ravel())
    if h > 1:
        e_rank_parts.append(np.maximum(rank[:-1, :], rank[1:, :]).ravel())
    edge_rank = np.concatenate(e_rank_parts) if e_rank_parts else np.zeros(0, dtype=np.int64)
    n_edges = edge_rank.size
    edge_sorted = np.lexsort((np.arange(n_edges), edge_rank))
    edge_pos = np.empty(n_edges, dtype=np.int64)
    edge_pos[edge_sorted] = np.arange(n_edges)

    if h > 1 and w > 1:
        sq_rank = np.maximum(
            np.maximum(rank[:-1, :-1], rank[:-1, 1:]),
            np.maximum(rank[1:, :-1], rank[1:, 1:]),
        ).ravel()
    else:
        sq_rank = np.zeros(0, dtype=np.int64)
    n_squares = sq_rank.size
    sq_sorted = np.lexsort((np.arange(n_squares), sq_rank))
    return rank, vals_by_rank, edge_rank, edge_sorted, edge_pos, sq_rank, sq_sorted


def _edge_endpoints(h: int, w: int, edge_id: int) -> tuple[int, int]:
    """Flat endpoints of edge ``edge_id`` (horizontal block first)."""
    n_horiz = h * (w - 1)
    if edge_id < n_horiz:
        i, j = divmod(edge_id, w - 1)
        a = i * w + j
        return a, a + 1
    k = edge_id - n_horiz
    i, j = divmod(k, w)
    a = i * w + j
    return a, a + w


def _square_edges(h: int, w: int, sq_id: int) -> tuple[int, int, int, int]:
    """The four boundary edge ids of square ``sq_id``."""
    n_horiz = h * (w - 1)
    i, j = divmod(sq_id, w - 1)
    top = i * (w - 1) + j
    bottom = (i + 1) * (w - 1) + j
    left = n_horiz + i * w + j
    right = n_horiz + i * w + j + 1
    return top, bottom, left, right


def _h0_union_find(values: np.ndarray) -> list[tuple[float, float]]:
    """H0 pairs via the elder-rule union-find sweep of sorted edges."""
    h, w = values.shape
    rank, vals_by_rank, edge_rank, edge_sorted, _, _, _ = _grid_complex(values)
    rank_flat = rank.ravel()
    n = rank_flat.size
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    pairs: list[tuple[float, float]] = []
    for eid in edge_sorted:
        u, v = _edge_endpoints(h, w, int(eid))
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        # Elder rule: the later-born root dies at this edge.
        if rank_flat[ru] > rank_flat[rv]:
            ru, rv = rv, ru
        er = int(edge_rank[eid])
        young_birth = int(rank_flat[rv])
        if young_birth != er:
            pairs.append((float(vals_by_rank[young_birth]), float(vals_by_rank[er])))
        parent[rv] = ru
    roots = {find(i) for i in range(n)}
    for r in sorted(roots, key=lambda x: rank_flat[x]):
        pairs.append((float(vals_by_rank[rank_flat[r]]), INF))
    return pairs


def _reduce_columns(columns: Iterable[tuple[int, int]]) -> dict[int, tuple[int, int]]:
    """Left-to-right Z2 reduction; returns pivot row -> (column id, column bits)."""
    pivots: dict[int, tuple[int, int]] = {}
    for cid, col in columns:
        while col:
            low = col.bit_length() - 1
            hit = pivots.get(low)
            if hit is None:
                break
            col ^= hit[1]
        if col:
            pivots[col.bit_length() - 1] = (cid, col)
    return pivots


def _h1_reduction(values: np.ndarray):
    """Reduce the square/edge boundary matrix.

    Returns (pairs, cleared_edge_positions): the H1 (birth, death) list and
    the set of edge positions paired as H1 births, reusable as the clearing
    set for the dimension-0 reduction.
    """
    h, w = values.shape
    _, vals_by_rank, edge_rank, edge_sorted, edge_pos, sq_rank, sq_sorted = _grid_complex(values)

    def square_columns():
        for sid in sq_sorted:
            bits = 0
            for e in _square_edges(h, w, int(sid)):
                bits |= 1 << int(edge_pos[e])
            yield int(sid), bits

    pivots = _reduce_columns(square_columns())
    pairs: list[tuple[float, float]] = []
    cleared: set[int] = set(pivots.keys())
    edge_by_pos = edge_sorted  # position -> edge id
    for low, (sid, _) in pivots.items():
        b_rank = int(edge_rank[edge_by_pos[low]])
        d_rank = int(sq_rank[sid])
        if b_rank != d_rank:
            pairs.append((float(vals_by_rank[b_rank]), float(vals_by_rank[d_rank])))
    n_squares = sq_rank.size
    if len(pivots) != n_squares:
        # A zero square column would be a 2-cycle; impossible on a planar patch.
        raise AssertionError("square/edge reduction produced a zero column")
    return pairs, cleared


def _h0_reduction(values: np.ndarray, cleared: set[int]) -> list[tuple[float, float]]:
    """H0 pairs via edge/vertex reduction, skipping cleared columns."""
    h, w = values.shape
    rank, vals_by_rank, edge_rank, edge_sorted, _, _, _ = _grid_complex(values)
    rank_flat = rank.ravel()

    def edge_columns():
        for pos, eid in enumerate(edge_sorted):
            if pos in cleared:
                continue
            u, v = _edge_endpoints(h, w, int(eid))
            yield int(eid), (1 << int(rank_flat[u])) | (1 << int(rank_flat[v]))

    pivots = _reduce_columns(edge_columns())
    pairs: list[tuple[float, float]] = []
    for low, (eid, _) in pivots.items():
        er = int(edge_rank[eid])
        if low != er:
            pairs.append((float(vals_by_rank[low]), float(vals_by_rank[er])))
    # Vertex ranks never used as a pivot row are components that survive.
    paired = set(pivots.keys())
    for r in range(rank_flat.size):
        if r not in paired:
            pairs.append((float(vals_by_rank[r]), INF))
    return pairs


def sublevel_persistence(field, dim: int) -> PersistenceDiagram:
    """Persistence diagram of the sublevel filtration in dimension 0 or 1.

    Births and deaths are reported as the unperturbed field values of the
    defining vertices; +inf marks essential classes.
    """
    values = as_values(field)
    if dim == 0:
        return PersistenceDiagram(0, tuple(_h0_union_find(values)))
    if dim == 1:
        pairs, _ = _h1_reduction(values)
        return PersistenceDiagram(1, tuple(pairs))
    raise DimensionMismatch(f"dimension must be 0 or 1, got {dim}")


def sublevel_persistence_reduction(field, dim: int) -> PersistenceDiagram:
    """Boundary-matrix route for both dimensions, with clearing.

    Dimension-2 columns are reduced first; edges paired there are cleared
    before the dimension-1 reduction. Agrees with
    :func:`sublevel_persistence` on every input.
    """
    values = as_values(field)
    if dim not in (0, 1):
        raise DimensionMismatch(f"dimension must be 0 or 1, got {dim}")
    h1_pairs, cleared = _h1_reduction(values)
    if dim == 1:
        return PersistenceDiagram(1, tuple(h1_pairs))
    return PersistenceDiagram(0, tuple(_h0_reduction(values, cleared)))


def filter_by_persistence(pd: PersistenceDiagram, min_persistence: float) -> PersistenceDiagram:
    """Drop finite pairs with death - birth < min_persistence; keep essentials."""
    if min_persistence < 0:
        raise FormatError("min_persistence must be nonnegative")
    kept = tuple(
        (b, d) for b, d in pd.pairs if math.isinf(d) or d - b >= min_persistence
    )
    return PersistenceDiagram(pd.dim, kept)


# ---------------------------------------------------------------------------
# Bottleneck distance


def _inf_dist(p: tuple[float, float], q: tuple[float, float]) -> float:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def _half_persistence(p: tuple[float, float]) -> float:
    return (p[1] - p[0]) / 2.0


def _hopcroft_karp(n_left: int, n_right: int, adj: Sequence[Sequence[int]]) -> int:
    """Maximum bipartite matching size (BFS/DFS phase algorithm)."""
    inf = float("inf")
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [0.0] * n_left

    def bfs() -> bool:
        queue = []
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0.0
                queue.append(u)
            else:
                dist[u] = inf
        found = False
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = inf
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] == -1 and dfs(u):
                size += 1
    return size


def _saturates(forced: np.ndarray, dist_rows: np.ndarray, t: float) -> bool:
    """Can every forced point be matched injectively within distance t?"""
    if forced.size == 0:
        return True
    if dist_rows.size == 0:
        return False
    adj = []
    for i in forced:
        row = np.nonzero(dist_rows[i] <= t)[0]
        if row.size == 0:
            return False
        adj.append(row.tolist())
    return _hopcroft_karp(len(adj), dist_rows.shape[1], adj) == len(adj)


def _matching_feasible(half_a, half_b, dist: np.ndarray, t: float) -> bool:
    """Matching-with-diagonal feasibility at threshold t.

    A matching within t exists iff the points forced off the diagonal
    (half-persistence above t) on each side can each be covered on their
    own: by the Mendelsohn-Dulmage theorem two one-sided coverings merge
    into one matching covering both.
    """
    forced_a = np.nonzero(half_a > t)[0]
    forced_b = np.nonzero(half_b > t)[0]
    return _saturates(forced_a, dist, t) and _saturates(forced_b, dist.T, t)


def _finite_bottleneck(a: list, b: list) -> float:
    # Points on the diagonal can always ride their own projection at cost 0
    # and can never partner a forced point (any such edge would certify the
    # point unforced), so they drop out exactly.
    a = [p for p in a if p[1] > p[0]]
    b = [q for q in b if q[1] > q[0]]
    if not a and not b:
        return 0.0
    arr_a = np.asarray(a, dtype=np.float64).reshape(len(a), 2)
    arr_b = np.asarray(b, dtype=np.float64).reshape(len(b), 2)
    half_a = (arr_a[:, 1] - arr_a[:, 0]) / 2.0
    half_b = (arr_b[:, 1] - arr_b[:, 0]) / 2.0
    if len(a) and len(b):
        dist = np.maximum(
            np.abs(arr_a[:, 0, None] - arr_b[None, :, 0]),
            np.abs(arr_a[:, 1, None] - arr_b[None, :, 1]),
        )
    else:
        dist = np.zeros((len(a), len(b)))
    # the all-diagonal matching caps the optimum, so larger costs are noise
    upper = max(half_a.max() if len(a) else 0.0, half_b.max() if len(b) else 0.0)
    candidates = {0.0, upper}
    candidates.update(half_a[half_a <= upper].tolist())
    candidates.update(half_b[half_b <= upper].tolist())
    if dist.size:
        candidates.update(dist[dist <= upper].ravel().tolist())
    levels = sorted(candidates)
    lo, hi = 0, len(levels) - 1
    if not _matching_feasible(half_a, half_b, dist, levels[hi]):
        raise AssertionError("bottleneck search has no feasible candidate")
    while lo < hi:
        mid = (lo + hi) // 2
        if _matching_feasible(half_a, half_b, dist, levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    return levels[lo]


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram) -> float:
    """Exact bottleneck distance between two same-dimension diagrams.

    Finite pairs match each other or their diagonal projection; essential
    pairs match among themselves by birth difference. The optimum is found
    by binary search over the exact candidate cost set with a maximum
    bipartite matching feasibility test.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"diagram dimensions differ: {a.dim} vs {b.dim}")
    ess_a = sorted(a.essential_births)
    ess_b = sorted(b.essential_births)
    if len(ess_a) != len(ess_b):
        raise EssentialCountMismatch(
            f"{len(ess_a)} vs {len(ess_b)} essential classes (distance is infinite)"
        )
    ess_cost = max((abs(x - y) for x, y in zip(ess_a, ess_b)), default=0.0)
    fin_cost = _finite_bottleneck(list(a.finite_pairs), list(b.finite_pairs))
    return max(ess_cost, fin_cost)


# ---------------------------------------------------------------------------
# Diagram CSV (header "dim,birth,death"; 17 significant digits; "inf" deaths)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".17g")


def diagrams_to_csv(diagrams: Iterable[PersistenceDiagram]) -> str:
    lines = ["dim,birth,death"]
    for pd in diagrams:
        for b, d in pd.pairs:
            lines.append(f"{pd.dim},{_fmt(b)},{_fmt(d)}")
    return "\n".join(lines) + "\n"


def write_diagram_csv(path, diagrams: Iterable[PersistenceDiagram]) -> None:
    Path(path).write_text(diagrams_to_csv(diagrams))


def read_diagram_csv(path) -> dict[int, PersistenceDiagram]:
    """Parse a diagram CSV into one diagram per dimension present."""
    text = Path(path).read_text()
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header != ["dim", "birth", "death"]:
        raise FormatError(f"bad diagram CSV header: {header}")
    by_dim: dict[int, list[tuple[float, float]]] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"bad diagram CSV row: {row}")
        dim = int(row[0])
        birth = float(row[1])
        death = INF if row[2].strip() == "inf" else float(row[2])
        by_dim.setdefault(dim, []).append((birth, death))
    return {dim: PersistenceDiagram(dim, tuple(pairs)) for dim, pairs in by_dim.items()}
