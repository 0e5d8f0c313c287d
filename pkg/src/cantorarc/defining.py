"""Hierarchical domain construction around a finite planar sample.

Builds the word tree of nested full domains U_w (neighborhood components of
the member points, hole-filled on per-node occupancy grids), the outward
exhaustion, per-node constants (eps_w, lambda_w, the neighborhoods N_w) and
entry/exit boundary data.

Coordinates are canonical: the input sample is rescaled to diameter 1/4 and
translated so the anchor point o (the sample point nearest the centroid)
sits at the origin.  The root domain is the filled unit disk around o.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from cantorarc.errors import (
    GridTooCoarse,
    NotTotallyDisconnected,
    SeparationFailure,
)
from cantorarc.geometry import (
    Ball,
    GridRegion,
    Point,
    PointSet,
    STRUCT8,
    diameter,
    fill_holes,
    neighborhood_components,
    region_from_points,
)

Word = Tuple[int, ...]

# Canonical rescaled sample diameter; keeps diam U_1 well under half of
# diam U_eps = 2 for every input.
CANONICAL_DIAM = 0.25

# Wrapper neighborhood radius, as a multiple of the sample's largest
# single-linkage (MST) edge: the smallest scale guaranteed to connect E.
WRAPPER_MST_FACTOR = 1.2

# Exhaustion arithmetic needs 1 + 8*xi <= 4*xi^2, i.e. xi >= ~2.12.
XI_EXHAUSTION_FLOOR = 2.25

MAX_SHRINK_STEPS = 24

# Relative radius floor for partition refinement.
DUP_TOL_ABS = 1e-12


@dataclass
class TreeNode:
    word: Word
    members: np.ndarray  # indices into the canonical sample
    region: GridRegion
    diam_U: float
    parent: Optional[Word]
    children: List[Word] = field(default_factory=list)
    radius_used: float = 0.0  # neighborhood radius that carved this node
    dist_to_parent_boundary: float = math.nan
    dist_boundary_to_E: float = math.nan
    eps_w: float = math.nan
    lambda_w: float = math.nan
    rho_parent: float = math.nan
    x_w: Optional[Point] = None
    y_w: Optional[Point] = None
    X_w: Optional[Ball] = None
    Y_w: Optional[Ball] = None
    uhat_mask: Optional[np.ndarray] = None
    nbhd_mask: Optional[np.ndarray] = None
    child_masks: Dict[Word, np.ndarray] = field(default_factory=dict)
    shrink_steps: int = 0
    tie_flag: bool = False

    @property
    def n_children(self) -> int:
        return len(self.children)

    def boundary_clearance(self, coords: np.ndarray) -> float:
        """Distance from the region boundary to this node's member points."""
        return _set_distance(self.region.boundary_points(), coords[self.members])


@dataclass
class ExhaustionLevel:
    index: int  # -1, -2, ...
    region: GridRegion
    diam_U: float
    radius_used: float
    dist_inner_to_boundary: float = math.nan
    anchor_clearance: float = math.nan  # dist(o, boundary)
    uhat_mask: Optional[np.ndarray] = None


@dataclass
class DefiningTree:
    E: PointSet
    mode: str  # "qs" | "topological"
    delta: float
    grid_cells: int
    max_depth: int
    origin: Point
    transform: Tuple[float, float, float]  # scale, tx, ty: canonical = scale*world + t
    nodes: Dict[Word, TreeNode] = field(default_factory=dict)
    exhaustion: List[ExhaustionLevel] = field(default_factory=list)
    xi_measured: float = math.nan
    xi_exhaustion: float = math.nan
    notes: List[str] = field(default_factory=list)

    ROOT: Word = ()
    WRAPPER: Word = (1,)

    def node(self, w: Word) -> TreeNode:
        return self.nodes[w]

    def children(self, w: Word) -> List[Word]:
        return self.nodes[w].children

    def words(self) -> List[Word]:
        return sorted(self.nodes.keys(), key=lambda w: (len(w), w))

    def leaves(self) -> List[Word]:
        return [w for w, n in self.nodes.items() if not n.children]

    def n_children_map(self) -> Dict[Word, int]:
        return {w: n.n_children for w, n in self.nodes.items() if n.children}

    def diam_map(self) -> Dict[Word, float]:
        return {w: n.diam_U for w, n in self.nodes.items()}

    def depth_of(self, w: Word) -> int:
        return max(len(w) - 1, 0)  # generations below the wrapper


def cantor_partition(E: PointSet, delta: float) -> List[PointSet]:
    """Split a sample into well-separated parts of diameter ≤ delta·diam E.

    Repeated neighborhood-component clustering with shrinking radius; parts
    that still satisfy the diameter bound are kept as-is.
    """
    assert 0.0 < delta < 1.0 and len(E) >= 1
    from cantorarc.errors import ResolutionFailure

    target = delta * E.diam
    if E.diam == 0.0:
        return [E]
    out: List[PointSet] = []
    queue = [(E, E.diam / 2.0)]
    while queue:
        part, radius = queue.pop()
        if diameter(part.coords) <= target:
            out.append(part)
            continue
        sub = neighborhood_components(part, radius)
        while len(sub) == 1:
            radius *= 0.5
            if radius < DUP_TOL_ABS * E.diam:
                raise ResolutionFailure(
                    "part cannot be split above duplicate tolerance"
                )
            sub = neighborhood_components(part, radius)
        queue.extend((p, radius) for p in sub)

    def leftmost(p: PointSet):
        sub = p.coords
        k = np.lexsort((sub[:, 1], sub[:, 0]))[0]
        return (sub[k, 0], sub[k, 1])

    return sorted(out, key=leftmost)


def canonicalize(E: PointSet):
    """Rescale/translate the sample to the canonical frame.

    Returns (canonical PointSet, anchor point o, transform (s, tx, ty)).
    """
    coords = E.coords
    d = diameter(coords)
    s = CANONICAL_DIAM / d if d > 0 else 1.0
    centroid = coords.mean(axis=0)
    o_idx = int(np.argmin(np.hypot(*(coords - centroid).T)))
    o_world = coords[o_idx]
    tx, ty = -s * o_world
    canon = coords * s + np.array([tx, ty])
    return PointSet(canon, E.labels), Point(0.0, 0.0), (s, float(tx), float(ty))


def mask_of_region_on(grid: GridRegion, other: GridRegion) -> np.ndarray:
    """Rasterize another region's membership onto this grid's cells."""
    x0, y0, x1, y1 = other.bbox()
    ix0 = max(int((x0 - grid.origin.x) / grid.cell) - 1, 0)
    iy0 = max(int((y0 - grid.origin.y) / grid.cell) - 1, 0)
    ix1 = min(int((x1 - grid.origin.x) / grid.cell) + 2, grid.width)
    iy1 = min(int((y1 - grid.origin.y) / grid.cell) + 2, grid.height)
    out = np.zeros((grid.height, grid.width), dtype=bool)
    if ix0 >= ix1 or iy0 >= iy1:
        return out
    xs = grid.origin.x + (np.arange(ix0, ix1) + 0.5) * grid.cell
    ys = grid.origin.y + (np.arange(iy0, iy1) + 0.5) * grid.cell
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    out[iy0:iy1, ix0:ix1] = other.contains(pts).reshape(iy1 - iy0, ix1 - ix0)
    return out


def _max_mst_edge(coords: np.ndarray) -> float:
    from cantorarc.geometry import _mst_adjacency

    adj = _mst_adjacency(coords)
    best = 0.0
    for lst in adj:
        for _, w in lst:
            best = max(best, w)
    return best


def _set_distance(pts_a: np.ndarray, pts_b: np.ndarray) -> float:
    if len(pts_a) == 0 or len(pts_b) == 0:
        return math.inf
    tree = cKDTree(pts_b)
    d, _ = tree.query(pts_a, k=1)
    return float(d.min())


def build_tree(
    E: PointSet,
    delta: float,
    max_depth: int,
    grid_cells: int,
    mode: str = "qs",
) -> DefiningTree:
    """Build the nested-domain tree to the requested depth.

    In QS mode the neighborhood radius at a node is delta·diam U_w; in
    topological mode the radius comes from the measured clearance formula.
    Children are the neighborhood components, hole-filled; single-component
    nodes whose diameter fails to halve trigger a radius-halving retry.
    """
    assert 0.0 < delta < 0.5
    assert grid_cells >= 64
    canon, o, transform = canonicalize(E)
    tree = DefiningTree(
        E=canon,
        mode=mode,
        delta=delta,
        grid_cells=grid_cells,
        max_depth=max_depth,
        origin=o,
        transform=transform,
    )
    coords = canon.coords
    all_idx = np.arange(len(coords))

    # U_eps: filled unit disk around the anchor.
    root_region = fill_holes(
        region_from_points(np.array([[o.x, o.y]]), 1.0, grid_cells)
    )
    tree.nodes[tree.ROOT] = TreeNode(
        word=tree.ROOT,
        members=all_idx,
        region=root_region,
        diam_U=root_region.diam,
        parent=None,
        radius_used=1.0,
    )

    # U_1: tight connected wrapper around the whole sample.
    if len(coords) > 1:
        r1 = WRAPPER_MST_FACTOR * max(_max_mst_edge(coords), 1e-9)
    else:
        r1 = 0.125
    wrapper_region = fill_holes(region_from_points(coords, r1, grid_cells))
    n_comp = ndimage.label(wrapper_region.occupancy, structure=STRUCT8)[1]
    while n_comp > 1:
        r1 *= 1.5
        wrapper_region = fill_holes(region_from_points(coords, r1, grid_cells))
        n_comp = ndimage.label(wrapper_region.occupancy, structure=STRUCT8)[1]
    tree.nodes[tree.WRAPPER] = TreeNode(
        word=tree.WRAPPER,
        members=all_idx,
        region=wrapper_region,
        diam_U=wrapper_region.diam,
        parent=tree.ROOT,
        radius_used=r1,
    )
    tree.nodes[tree.ROOT].children = [tree.WRAPPER]

    dup_tol = 1e-12 * max(canon.diam, 1.0)

    def subdivide(word: Word):
        node = tree.nodes[word]
        if tree.depth_of(word) >= max_depth:
            return
        members = coords[node.members]
        member_diam = diameter(members)
        if mode == "qs":
            radius = delta * node.diam_U
        else:
            radius = _topological_radius(tree, node, members, member_diam)
        parts = None
        for _ in range(MAX_SHRINK_STEPS):
            parts = neighborhood_components(PointSet(members), radius)
            if len(parts) > 1:
                break
            new_diam = diameter(parts[0].coords) + 2 * radius
            if new_diam <= 0.5 * node.diam_U:
                break
            radius *= 0.5
            node.shrink_steps += 1
            if radius < dup_tol:
                raise NotTotallyDisconnected(
                    f"node {word}: members do not split above duplicate tolerance"
                )
        # map part coordinates back to sample indices
        part_indices = []
        tree_members = cKDTree(members)
        for part in parts:
            _, loc = tree_members.query(part.coords, k=1)
            part_indices.append(node.members[loc])

        regions = []
        for part in parts:
            reg = fill_holes(region_from_points(part.coords, radius, grid_cells))
            regions.append(reg)

        # maximal-element selection: absorb parts swallowed by another's fill
        absorbed = [False] * len(parts)
        for i, reg in enumerate(regions):
            for j, part in enumerate(parts):
                if i == j or absorbed[i] or absorbed[j]:
                    continue
                if reg.contains(part.coords).all():
                    part_indices[i] = np.concatenate([part_indices[i], part_indices[j]])
                    absorbed[j] = True
                    node.tie_flag = True

        child_no = 0
        for i, reg in enumerate(regions):
            if absorbed[i]:
                continue
            child_no += 1
            cw = word + (child_no,)
            child = TreeNode(
                word=cw,
                members=np.sort(part_indices[i]),
                region=reg,
                diam_U=reg.diam,
                parent=word,
                radius_used=radius,
            )
            if child.boundary_clearance(coords) < 2 * reg.cell:
                raise GridTooCoarse(
                    f"node {cw}: boundary clearance below 2 cells"
                )
            tree.nodes[cw] = child
            node.children.append(cw)
        for cw in node.children:
            subdivide(cw)

    subdivide(tree.WRAPPER)
    _measure_distances(tree)
    _measure_xi(tree)
    _materialize_uhat(tree)
    if mode == "qs" and tree.delta >= 1.0 / (2.0 * tree.xi_measured):
        tree.notes.append(
            f"delta={tree.delta} exceeds (2*xi)^-1={1/(2*tree.xi_measured):.4f}; proceeding"
        )
    return tree


def _topological_radius(tree, node, members, member_diam):
    """Per-node radius for topological mode: small enough to separate the
    natural clusters, bounded by the boundary clearance."""
    base = member_diam if member_diam > 0 else node.diam_U
    r = 0.5 * node.boundary_clearance(tree.E.coords)
    if not math.isfinite(r) or r <= 0:
        r = 0.25 * base
    parts = neighborhood_components(PointSet(members), max(r, 1e-12))
    if len(parts) > 1:
        gap = min(
            _set_distance(parts[i].coords, parts[j].coords)
            for i in range(len(parts))
            for j in range(i + 1, len(parts))
        )
        r = min(r, gap / 3.0)
    return max(min(r, tree.delta * base), 1e-12)


def _measure_distances(tree: DefiningTree):
    coords = tree.E.coords
    for w in tree.words():
        node = tree.node(w)
        node.dist_boundary_to_E = _set_distance(node.region.boundary_points(), coords)
        if node.parent is not None:
            parent = tree.node(node.parent)
            node.dist_to_parent_boundary = _set_distance(
                node.region.boundary_points(), parent.region.boundary_points()
            )


def _measure_xi(tree: DefiningTree):
    """xi_measured: the least xi making the quantitative clearances hold."""
    xi = 1.0
    for w in tree.words():
        node = tree.node(w)
        if node.diam_U <= 0:
            continue
        xi = max(xi, node.diam_U / node.dist_boundary_to_E)
        if node.parent is not None:
            parent = tree.node(node.parent)
            xi = max(xi, node.diam_U / (tree.delta * parent.diam_U))
            xi = max(xi, node.diam_U / node.dist_to_parent_boundary)
    tree.xi_measured = xi
    tree.xi_exhaustion = max(xi, XI_EXHAUSTION_FLOOR)


def _materialize_uhat(tree: DefiningTree):
    for w in tree.words():
        node = tree.node(w)
        occ = node.region.occupancy.copy()
        for cw in node.children:
            child_mask = mask_of_region_on(node.region, tree.node(cw).region)
            node.child_masks[cw] = child_mask
            occ &= ~child_mask
        node.uhat_mask = occ


def region_neighborhood(region: GridRegion, radius: float, grid_cells: int) -> GridRegion:
    """Filled radius-neighborhood of a region, on a fresh padded grid."""
    x0, y0, x1, y1 = region.bbox()
    x0 -= radius
    y0 -= radius
    x1 += radius
    y1 += radius
    span = max(x1 - x0, y1 - y0)
    cell = span / grid_cells
    pad = 3
    x0 -= pad * cell
    y0 -= pad * cell
    w = int(math.ceil((x1 - x0) / cell)) + pad
    h = int(math.ceil((y1 - y0) / cell)) + pad
    xs = x0 + (np.arange(w) + 0.5) * cell
    ys = y0 + (np.arange(h) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    d, _ = region.boundary_tree().query(centers, k=1)
    inside = region.contains(centers)
    occ = (inside | (d < radius)).reshape(h, w)
    return fill_holes(GridRegion(Point(x0, y0), cell, occ))


def build_exhaustion(tree: DefiningTree, levels: int) -> DefiningTree:
    """Grow the outward exhaustion U_0 ⊂ U_{-1} ⊂ … by filled
    (4·xi·diam)-neighborhoods; verifies nesting clearances as it goes."""
    assert levels >= 1
    xi = tree.xi_exhaustion
    tree.exhaustion = []
    inner = tree.node(tree.ROOT).region
    inner_diam = tree.node(tree.ROOT).diam_U
    o = np.array([[tree.origin.x, tree.origin.y]])
    for k in range(1, levels + 1):
        radius = 4.0 * xi * inner_diam
        reg = region_neighborhood(inner, radius, tree.grid_cells)
        lvl = ExhaustionLevel(
            index=-k, region=reg, diam_U=reg.diam, radius_used=radius
        )
        lvl.dist_inner_to_boundary = _set_distance(
            inner.boundary_points(), reg.boundary_points()
        )
        lvl.anchor_clearance = float(reg.boundary_tree().query(o, k=1)[0][0])
        inner_mask = mask_of_region_on(reg, inner)
        lvl.uhat_mask = reg.occupancy & ~inner_mask
        tree.exhaustion.append(lvl)
        inner = reg
        inner_diam = reg.diam
    return tree


def compute_constants(tree: DefiningTree) -> DefiningTree:
    """Attach eps_w, lambda_w and the neighborhood masks N_w to every node.

    QS mode uses the uniform constants (4·xi)^-3 and xi; topological mode
    measures the clearance formula per node.
    """
    xi = tree.xi_measured
    coords = tree.E.coords
    for w in tree.words():
        node = tree.node(w)
        if tree.mode == "qs":
            node.eps_w = (4.0 * xi) ** -3
            node.lambda_w = xi
        else:
            terms = []
            if node.parent is not None:
                terms.append(node.dist_to_parent_boundary)
            for cw in node.children:
                child = tree.node(cw)
                terms.append(
                    _set_distance(
                        node.region.boundary_points(), child.region.boundary_points()
                    )
                )
                terms.append(child.diam_U)
                for gw in child.children:
                    grand = tree.node(gw)
                    terms.append(
                        _set_distance(
                            child.region.boundary_points(),
                            grand.region.boundary_points(),
                        )
                    )
            if terms:
                node.eps_w = min(terms) / (4.0 * node.diam_U)
            else:
                node.eps_w = (4.0 * max(xi, 2.0)) ** -3
            if node.children:
                diams = [tree.node(cw).diam_U for cw in node.children]
                ratio = max(diams) / min(diams)
                clear = max(
                    tree.node(cw).diam_U / tree.node(cw).dist_boundary_to_E
                    for cw in node.children
                )
                node.lambda_w = min(ratio, clear)
            else:
                node.lambda_w = math.nan
    # materialize N_w = N(Uhat_w, eps_w diam U_w), clamped to grid padding
    for w in tree.words():
        node = tree.node(w)
        # floor of 3 cells: a thinner collar fragments under 4-connected
        # traversal, stranding entry/exit balls on the outer boundary
        dil = max(3, int(round(node.eps_w * node.diam_U / node.region.cell)))
        dil = min(dil, 4)
        dist = ndimage.distance_transform_edt(~node.uhat_mask)
        node.nbhd_mask = dist <= dil
    return tree


def verify_nbhd_separation(tree: DefiningTree, max_pairs: int = 20000):
    """Measured slack of the neighborhood-separation inequality over
    non-parent, non-sibling pairs at each depth; returns min slack."""
    words = [w for w in tree.words() if len(w) >= 1]
    by_len: Dict[int, List[Word]] = {}
    for w in words:
        by_len.setdefault(len(w), []).append(w)
    min_slack = math.inf
    checked = 0
    for _, group in sorted(by_len.items()):
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                w, u = group[a], group[b]
                if w[:-1] == u[:-1]:
                    continue  # siblings
                nw, nu = tree.node(w), tree.node(u)
                need = nw.eps_w * nw.diam_U + nu.eps_w * nu.diam_U
                bw = nw.region.bbox()
                bu = nu.region.bbox()
                dx = max(bu[0] - bw[2], bw[0] - bu[2], 0.0)
                dy = max(bu[1] - bw[3], bw[1] - bu[3], 0.0)
                if math.hypot(dx, dy) >= need:
                    slack = math.hypot(dx, dy) - need
                    min_slack = min(min_slack, slack)
                    continue
                pa = nw.region.cell_centers(nw.nbhd_mask)
                pb = nu.region.cell_centers(nu.nbhd_mask)
                d = _set_distance(pa, pb)
                min_slack = min(min_slack, d - need)
                checked += 1
                if checked > max_pairs:
                    return min_slack
    return min_slack


def select_entries_exits(tree: DefiningTree, seed: int = 0, restarts: int = 64) -> DefiningTree:
    """Choose boundary entry/exit points for every non-root node.

    Entries maximize the min pairwise separation d(x_i,x_j) scaled by
    max(diam_i, diam_j) (farthest-point selection with restarts); exits sit
    a third of rho·diam away along the boundary.  Ball radii follow the
    eps·rho·diam/12 rule, so compute_constants must run first.
    """
    rng = np.random.default_rng(seed)
    for w in tree.words():
        node = tree.node(w)
        kids = node.children
        if not kids:
            continue
        bpts = []
        diams = []
        for cw in kids:
            child = tree.node(cw)
            pts = child.region.boundary_points()
            if len(pts) > 256:
                idx = rng.choice(len(pts), 256, replace=False)
                pts = pts[np.sort(idx)]
            bpts.append(pts)
            diams.append(child.diam_U)
        n = len(kids)
        if n == 1:
            pts = bpts[0]
            k = np.lexsort((pts[:, 1], pts[:, 0]))[0]
            x = pts[k]
            rho = 1.0
            choice = [k]
        else:
            best_rho, choice = -1.0, None

            def score(sel):
                val = math.inf
                for i in range(n):
                    for j in range(i + 1, n):
                        d = math.hypot(*(bpts[i][sel[i]] - bpts[j][sel[j]]))
                        val = min(val, d / max(diams[i], diams[j]))
                return val

            for _ in range(restarts):
                sel = [int(rng.integers(len(p))) for p in bpts]
                for _ in range(3):  # local improvement sweeps
                    for i in range(n):
                        others = [
                            (bpts[j][sel[j]], max(diams[i], diams[j]))
                            for j in range(n)
                            if j != i
                        ]
                        cand = bpts[i]
                        vals = np.full(len(cand), math.inf)
                        for q, scale in others:
                            d = np.hypot(cand[:, 0] - q[0], cand[:, 1] - q[1])
                            vals = np.minimum(vals, d / scale)
                        sel[i] = int(np.argmax(vals))
                s = score(sel)
                if s > best_rho:
                    best_rho, choice = s, list(sel)
            rho = best_rho
        for i, cw in enumerate(kids):
            child = tree.node(cw)
            if n == 1:
                xi_pt = bpts[0][choice[0]]
            else:
                xi_pt = bpts[i][choice[i]]
            if rho * max(diams) < 2 * child.region.cell and n > 1:
                raise SeparationFailure(
                    f"node {w}: achieved rho below grid resolution"
                )
            target = rho * child.diam_U / 3.0
            pts = child.region.boundary_points()
            d = np.hypot(pts[:, 0] - xi_pt[0], pts[:, 1] - xi_pt[1])
            k = int(np.argmin(np.abs(d - target)))
            y_pt = pts[k]
            child.rho_parent = rho
            child.x_w = Point(*xi_pt)
            child.y_w = Point(*y_pt)
            radius = child.eps_w * rho * child.diam_U / 12.0
            child.X_w = Ball(child.x_w, radius)
            child.Y_w = Ball(child.y_w, radius)
    return tree


def verify_ball_separation(tree: DefiningTree):
    """Min slack of the pairwise entry/exit ball distance inequality."""
    nodes = [tree.node(w) for w in tree.words() if tree.node(w).X_w is not None]
    min_slack = math.inf
    for a in range(len(nodes)):
        for b in range(a, len(nodes)):
            na, nb = nodes[a], nodes[b]
            need = (
                na.rho_parent * na.eps_w * na.diam_U
                + nb.rho_parent * nb.eps_w * nb.diam_U
            ) / 12.0
            pairs = [(na.X_w, nb.Y_w)]
            if a != b:
                pairs += [(na.X_w, nb.X_w), (na.Y_w, nb.Y_w)]
            for A, B in pairs:
                d = math.hypot(A.center.x - B.center.x, A.center.y - B.center.y)
                d -= A.radius + B.radius
                min_slack = min(min_slack, d - need)
    return min_slack


def tree_to_json(tree: DefiningTree) -> dict:
    def wkey(w):
        return ".".join(map(str, w)) if w else "eps"

    nodes = {}
    for w in tree.words():
        n = tree.node(w)
        x0, y0, x1, y1 = n.region.bbox()
        nodes[wkey(w)] = {
            "word": list(w),
            "diam": n.diam_U,
            "eps": None if math.isnan(n.eps_w) else n.eps_w,
            "lambda": None if math.isnan(n.lambda_w) else n.lambda_w,
            "rho": None if math.isnan(n.rho_parent) else n.rho_parent,
            "entry": None if n.x_w is None else [n.x_w.x, n.x_w.y],
            "exit": None if n.y_w is None else [n.y_w.x, n.y_w.y],
            "bbox": [x0, y0, x1, y1],
            "n_children": n.n_children,
            "members": n.members.tolist(),
        }
    return {
        "mode": tree.mode,
        "delta": tree.delta,
        "grid_cells": tree.grid_cells,
        "max_depth": tree.max_depth,
        "xi_measured": tree.xi_measured,
        "transform": list(tree.transform),
        "nodes": nodes,
        "notes": list(tree.notes),
    }
