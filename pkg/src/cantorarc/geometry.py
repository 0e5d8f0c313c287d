"""Planar primitives: point sets, grid regions, components, chains, porosity.

Point sets are finite samples of a compact planar set.  Regions are
occupancy grids over padded bounding boxes; all region geometry (diameters,
boundary distances) is computed on cell centers and therefore carries a
discretization uncertainty of ±cell·√2/2, which callers are expected to
report rather than hide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import ConvexHull, cKDTree

from cantorarc.errors import DegenerateSet, FullGrid, PointNotInSet

# Duplicate-point tolerance, relative to diam (PointSet invariant).
DUP_TOL = 1e-12

# 4-connectivity structure used for hole filling and component labeling.
STRUCT4 = ndimage.generate_binary_structure(2, 1)
STRUCT8 = ndimage.generate_binary_structure(2, 2)


class Point(NamedTuple):
    x: float
    y: float


class Ball(NamedTuple):
    center: Point
    radius: float


@dataclass(frozen=True)
class PointSet:
    """Finite planar point set, optionally carrying word-address labels."""

    coords: np.ndarray  # shape (n, 2), float64
    labels: Optional[tuple] = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must have shape (n, 2)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.coords)

    @property
    def diam(self) -> float:
        return diameter(self.coords)

    def index_of(self, p) -> int:
        """Index of the point equal to p within duplicate tolerance."""
        p = np.asarray(p, dtype=float)
        d = np.hypot(*(self.coords - p).T)
        i = int(np.argmin(d))
        tol = max(self.diam, 1.0) * 1e-9
        if d[i] > tol:
            raise PointNotInSet(f"point {tuple(p)} not in set")
        return i


def diameter(coords: np.ndarray) -> float:
    """Exact diameter of a finite point set (convex hull + pairwise scan)."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if n == 0:
        return 0.0
    if n <= 2:
        return 0.0 if n == 1 else float(np.hypot(*(coords[0] - coords[1])))
    try:
        hull = coords[ConvexHull(coords).vertices]
    except Exception:  # collinear/degenerate input
        hull = coords
    d2 = np.sum((hull[:, None, :] - hull[None, :, :]) ** 2, axis=-1)
    return float(math.sqrt(d2.max()))


@dataclass(frozen=True)
class GridRegion:
    """Occupancy-grid model of a bounded planar domain.

    ``occupancy[iy, ix]`` covers the cell whose center is
    ``origin + (ix + 1/2, iy + 1/2) * cell``.  Regions are always built with
    at least 3 cells of free padding so the border-connected component of
    the complement stands in for the unbounded one.
    """

    origin: Point
    cell: float
    occupancy: np.ndarray  # bool, shape (height, width)
    _boundary_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        object.__setattr__(self, "occupancy", occ)
        assert self.cell > 0

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def cell_centers(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """World coordinates of the centers of masked (default occupied) cells."""
        if mask is None:
            mask = self.occupancy
        iy, ix = np.nonzero(mask)
        xs = self.origin.x + (ix + 0.5) * self.cell
        ys = self.origin.y + (iy + 0.5) * self.cell
        return np.column_stack([xs, ys])

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership; points outside the bounding box are outside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ix = np.floor((pts[:, 0] - self.origin.x) / self.cell).astype(int)
        iy = np.floor((pts[:, 1] - self.origin.y) / self.cell).astype(int)
        ok = (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)
        out = np.zeros(len(pts), dtype=bool)
        out[ok] = self.occupancy[iy[ok], ix[ok]]
        return out

    def boundary_mask(self) -> np.ndarray:
        """Occupied cells 4-adjacent to an unoccupied cell (or the border)."""
        occ = self.occupancy
        interior = ndimage.binary_erosion(occ, structure=STRUCT4, border_value=0)
        return occ & ~interior

    def boundary_points(self) -> np.ndarray:
        pts = self._boundary_cache.get("pts")
        if pts is None:
            pts = self.cell_centers(self.boundary_mask())
            self._boundary_cache["pts"] = pts
        return pts

    def boundary_tree(self) -> cKDTree:
        tree = self._boundary_cache.get("tree")
        if tree is None:
            tree = cKDTree(self.boundary_points())
            self._boundary_cache["tree"] = tree
        return tree

    @property
    def diam(self) -> float:
        d = self._boundary_cache.get("diam")
        if d is None:
            d = diameter(self.boundary_points())
            self._boundary_cache["diam"] = d
        return d

    @property
    def area_cells(self) -> int:
        return int(self.occupancy.sum())

    def bbox(self):
        """(xmin, ymin, xmax, ymax) of the occupied cells' footprint."""
        iy, ix = np.nonzero(self.occupancy)
        x0 = self.origin.x + ix.min() * self.cell
        y0 = self.origin.y + iy.min() * self.cell
        x1 = self.origin.x + (ix.max() + 1) * self.cell
        y1 = self.origin.y + (iy.max() + 1) * self.cell
        return (x0, y0, x1, y1)

    def with_occupancy(self, occ: np.ndarray) -> "GridRegion":
        return GridRegion(self.origin, self.cell, occ)


def region_from_points(
    points: np.ndarray, radius: float, grid_cells: int, pad_cells: int = 3
) -> GridRegion:
    """Occupancy grid of the open radius-neighborhood of a point set.

    The grid spans the points' bounding box inflated by the radius, plus
    ``pad_cells`` of guaranteed-free padding on every side.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x0, y0 = points.min(axis=0) - radius
    x1, y1 = points.max(axis=0) + radius
    span = max(x1 - x0, y1 - y0)
    if span <= 0:
        span = radius
    cell = span / grid_cells
    x0 -= pad_cells * cell
    y0 -= pad_cells * cell
    w = int(math.ceil((x1 - x0) / cell)) + pad_cells
    h = int(math.ceil((y1 - y0) / cell)) + pad_cells
    xs = x0 + (np.arange(w) + 0.5) * cell
    ys = y0 + (np.arange(h) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    d, _ = cKDTree(points).query(centers, k=1)
    occ = (d < radius).reshape(h, w)
    return GridRegion(Point(x0, y0), cell, occ)


def fill_holes(region: GridRegion) -> GridRegion:
    """Add every complement component not 4-connected to the grid border."""
    occ = region.occupancy
    border_free = (
        (~occ[0, :]).any()
        or (~occ[-1, :]).any()
        or (~occ[:, 0]).any()
        or (~occ[:, -1]).any()
    )
    if not border_free:
        raise FullGrid("no free border cell; increase padding")
    filled = ndimage.binary_fill_holes(occ, structure=STRUCT4)
    return region.with_occupancy(filled)


def neighborhood_components(E: PointSet, eps: float) -> list[PointSet]:
    """Partition by connectivity of the union of open eps-balls.

    Two points share a part iff they are joined by a chain of hops each
    strictly below 2·eps (open balls overlap iff centers are closer than
    2·eps).  Parts are returned in order of their leftmost member.
    """
    assert eps > 0 and len(E) > 0
    coords = E.coords
    n = len(coords)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = cKDTree(coords)
    for i, j in tree.query_pairs(2.0 * eps, output_type="ndarray"):
        if np.hypot(*(coords[i] - coords[j])) < 2.0 * eps:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    def leftmost(idx):
        sub = coords[idx]
        k = np.lexsort((sub[:, 1], sub[:, 0]))[0]
        return (sub[k, 0], sub[k, 1])

    parts = sorted(groups.values(), key=leftmost)
    out = []
    for idx in parts:
        labels = tuple(E.labels[i] for i in idx) if E.labels is not None else None
        out.append(PointSet(coords[idx], labels))
    return out


def _mst_adjacency(coords: np.ndarray):
    n = len(coords)
    d2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    dist = np.sqrt(d2)
    mst = minimum_spanning_tree(coo_matrix(dist)).tocoo()
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, j, w in zip(mst.row, mst.col, mst.data):
        adj[i].append((j, w))
        adj[j].append((i, w))
    return adj


def bottleneck_costs(coords: np.ndarray) -> np.ndarray:
    """All-pairs minimax bottleneck path costs on the complete graph.

    The minimax cost between two vertices equals the maximum edge weight on
    their minimum-spanning-tree path, so one MST plus n tree traversals
    suffices (O(n² log n) including the MST).
    """
    n = len(coords)
    adj = _mst_adjacency(coords)
    out = np.zeros((n, n))
    for src in range(n):
        stack = [(src, 0.0)]
        seen = [False] * n
        seen[src] = True
        while stack:
            u, best = stack.pop()
            out[src, u] = best
            for v, w in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append((v, max(best, w)))
    return out


def delta_chain_exists(E: PointSet, x, y, delta: float) -> bool:
    """True iff a chain x = x₀,…,xₙ = y in E has all hops ≤ delta·d(x,y).

    Computed exactly as: minimax bottleneck cost between x and y is at most
    delta·d(x,y).
    """
    assert delta > 0
    i = E.index_of(x)
    j = E.index_of(y)
    if i == j:
        raise PointNotInSet("x and y must be distinct points of E")
    d = float(np.hypot(*(E.coords[i] - E.coords[j])))
    costs = bottleneck_costs(E.coords)
    return bool(costs[i, j] <= delta * d + 1e-15 * d)


def uniform_disconnectedness(E: PointSet):
    """(delta_star, witness_pair): the chain threshold of the sample.

    delta_star = min over pairs of bottleneck(x,y)/d(x,y); no delta-chain
    joins any pair for delta < delta_star.
    """
    if len(E) < 2:
        raise DegenerateSet("need at least 2 points")
    coords = E.coords
    costs = bottleneck_costs(coords)
    d2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    dist = np.sqrt(d2)
    np.fill_diagonal(dist, np.inf)
    ratio = costs / dist
    np.fill_diagonal(ratio, np.inf)
    i, j = np.unravel_index(np.argmin(ratio), ratio.shape)
    witness = (Point(*coords[i]), Point(*coords[j]))
    return float(ratio[i, j]), witness


def porosity_probe(
    Y,
    samples: int,
    scales: Sequence[float],
    seed: int = 0,
    search_cells: int = 48,
) -> float:
    """Worst porosity constant over sampled (center, scale) probes.

    For each sampled x ∈ Y and r ∈ scales, a grid search inside B(x, r)
    finds the largest ball avoiding Y; the return value is the largest p
    such that every sample admitted a (p⁻¹·r)-ball.  Returns math.inf if
    some probe found no empty cell at the search resolution.
    """
    assert samples >= 1
    if isinstance(Y, GridRegion):
        pts = Y.cell_centers()
        obstacle = Y.cell_centers()
        thickness = Y.cell * 0.5
    else:
        pts = Y.coords
        obstacle = Y.coords
        thickness = 0.0
    tree = cKDTree(obstacle)
    rng = np.random.default_rng(seed)
    worst = 1.0
    for _ in range(samples):
        x = pts[rng.integers(len(pts))]
        for r in scales:
            assert r > 0
            step = 2.0 * r / search_cells
            g = np.arange(-r + step / 2, r, step)
            gx, gy = np.meshgrid(x[0] + g, x[1] + g)
            cand = np.column_stack([gx.ravel(), gy.ravel()])
            inside = np.hypot(cand[:, 0] - x[0], cand[:, 1] - x[1]) <= r
            cand = cand[inside]
            d_obstacle, _ = tree.query(cand, k=1)
            d_obstacle = np.maximum(d_obstacle - thickness, 0.0)
            room = r - np.hypot(cand[:, 0] - x[0], cand[:, 1] - x[1])
            best = float(np.minimum(d_obstacle, room).max())
            if best <= 0:
                return math.inf
            worst = max(worst, r / best)
    return worst
