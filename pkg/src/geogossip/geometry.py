"""Sensor placement and geometric random graph construction.

Points are drawn uniformly in the unit square and joined by an edge whenever
their Euclidean distance is at most the connectivity radius (closed ball).
Adjacency is stored in CSR form (``indptr``/``indices``, neighbor ids sorted
ascending) and built through a bucket grid whose cell side is at least the
radius, so only the 3x3 cell neighborhood has to be scanned per point.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._jit import maybe_njit

DEFAULT_RADIUS_CONSTANT = 2.0


@dataclass(frozen=True)
class PointSet:
    """n sensor positions in [0,1]^2, reproducible from the seed."""

    xy: np.ndarray
    n: int
    seed: int | None = None


@dataclass(frozen=True)
class GeometricGraph:
    """Undirected geometric graph plus the bucket grid used to build it.

    Immutable after construction; shared read-only by the simulators.
    """

    points: PointSet
    radius: float
    indptr: np.ndarray
    indices: np.ndarray
    grid_side: int
    cell_start: np.ndarray    # prefix offsets into cell_points, len grid_side^2 + 1
    cell_points: np.ndarray   # point ids grouped by bucket cell
    point_cell: np.ndarray    # bucket cell id per point

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    @property
    def n(self) -> int:
        return self.points.n

    def edge_count(self) -> int:
        return int(self.indices.shape[0]) // 2


def sample_points(n: int, seed: int) -> PointSet:
    """Draw n i.i.d. uniform points in the unit square.

    Args:
        n: number of sensors, at least 1.
        seed: RNG seed; identical seeds reproduce identical coordinates.

    Returns:
        PointSet with an (n, 2) float64 coordinate array.

    Raises:
        ValueError: if n < 1.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    rng = np.random.default_rng(seed)
    xy = rng.random((int(n), 2))
    return PointSet(xy=xy, n=int(n), seed=int(seed))


def connectivity_radius(n: float, c: float = DEFAULT_RADIUS_CONSTANT) -> float:
    """Radius c * sqrt(ln(n) / n) of the connectivity regime.

    Natural log by convention; c defaults to 2.0, which keeps G(n, r)
    connected in >= 99/100 seeds at n = 4096.

    Args:
        n: point count (any real >= 2 is accepted).
        c: positive scale constant.

    Raises:
        ValueError: if n < 2 or c <= 0.
    """
    if n < 2:
        raise ValueError(f"radius formula needs n >= 2, got {n}")
    if c <= 0:
        raise ValueError(f"radius constant must be positive, got {c}")
    return c * math.sqrt(math.log(n) / n)


@maybe_njit
def _count_and_fill(xy, order, cell_start, grid_side, radius, indptr, indices, fill):
    # Two-pass CSR build over the 3x3 bucket neighborhood of each point.
    # Closed ball: dx*dx + dy*dy <= radius*radius is THE adjacency test,
    # shared with the brute-force oracle.
    n = xy.shape[0]
    rsq = radius * radius
    total = 0
    for i in range(n):
        xi = xy[i, 0]
        yi = xy[i, 1]
        cx = int(xi * grid_side)
        if cx >= grid_side:
            cx = grid_side - 1
        cy = int(yi * grid_side)
        if cy >= grid_side:
            cy = grid_side - 1
        count = 0
        for ax in range(max(0, cx - 1), min(grid_side, cx + 2)):
            for ay in range(max(0, cy - 1), min(grid_side, cy + 2)):
                c = ax * grid_side + ay
                for k in range(cell_start[c], cell_start[c + 1]):
                    j = order[k]
                    if j == i:
                        continue
                    dx = xy[j, 0] - xi
                    dy = xy[j, 1] - yi
                    if dx * dx + dy * dy <= rsq:
                        if fill:
                            indices[indptr[i] + count] = j
                        count += 1
        if not fill:
            indptr[i + 1] = count
        total += count
    return total


def build_graph(points: PointSet, radius: float) -> GeometricGraph:
    """Build the geometric graph G(points, radius) with its bucket index.

    Args:
        points: sensor positions.
        radius: edge threshold in unit-square lengths, in (0, sqrt(2)].

    Returns:
        GeometricGraph with symmetric, irreflexive CSR adjacency; neighbor
        lists sorted by id.

    Raises:
        ValueError: if radius is not positive.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    xy = np.ascontiguousarray(points.xy, dtype=np.float64)
    n = points.n
    grid_side = max(1, int(1.0 / radius))

    ix = np.minimum((xy[:, 0] * grid_side).astype(np.int64), grid_side - 1)
    iy = np.minimum((xy[:, 1] * grid_side).astype(np.int64), grid_side - 1)
    point_cell = ix * grid_side + iy
    order = np.argsort(point_cell, kind="stable").astype(np.int64)
    counts = np.bincount(point_cell, minlength=grid_side * grid_side)
    cell_start = np.zeros(grid_side * grid_side + 1, dtype=np.int64)
    np.cumsum(counts, out=cell_start[1:])

    indptr = np.zeros(n + 1, dtype=np.int64)
    empty = np.empty(0, dtype=np.int64)
    _count_and_fill(xy, order, cell_start, grid_side, float(radius),
                    indptr, empty, False)
    np.cumsum(indptr[1:], out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int64)
    _count_and_fill(xy, order, cell_start, grid_side, float(radius),
                    indptr, indices, True)
    for i in range(n):
        indices[indptr[i]:indptr[i + 1]].sort()

    return GeometricGraph(points=points, radius=float(radius), indptr=indptr,
                          indices=indices, grid_side=grid_side,
                          cell_start=cell_start, cell_points=order,
                          point_cell=point_cell)


def brute_force_adjacency(points: PointSet, radius: float):
    """O(n^2) oracle: (indptr, indices) CSR identical to build_graph's."""
    xy = points.xy
    d = xy[:, None, :] - xy[None, :, :]
    within = (d[..., 0] ** 2 + d[..., 1] ** 2) <= radius * radius
    np.fill_diagonal(within, False)
    indptr = np.zeros(points.n + 1, dtype=np.int64)
    np.cumsum(within.sum(axis=1), out=indptr[1:])
    indices = np.nonzero(within)[1].astype(np.int64)
    return indptr, indices


@maybe_njit
def _component_size(indptr, indices, start, queue, seen):
    seen[:] = 0
    queue[0] = start
    seen[start] = 1
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if seen[v] == 0:
                seen[v] = 1
                queue[tail] = v
                tail += 1
    return tail


def is_connected(graph: GeometricGraph) -> bool:
    """True iff the graph has a single connected component."""
    n = graph.n
    if n <= 1:
        return True
    queue = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.uint8)
    return int(_component_size(graph.indptr, graph.indices, 0, queue, seen)) == n
