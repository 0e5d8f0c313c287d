"""Per-word arc construction by clearance-constrained grid pathfinding.

For every word w whose grandchildren exist, the map h_w consists of one
piece per gap interval of each subdivided child wi: piece j joins the exit
ball of child wij to the entry ball of child wi(j+1) (with the entry/exit
balls of wi itself at the row ends), staying inside the neighborhood N_wi.

Arcs of different words anchor inside shared entry/exit balls.  To keep
them disjoint at sub-grid scales every ball use gets a "port": an anchor
point inside the ball plus an approach spoke leaving the ball at an angle
chosen away from earlier users.  Grid paths run port-to-port, with small
protection disks blocking all foreign ball neighborhoods, so the only
close encounters between arcs are the angularly separated spokes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from cantorarc.curves import (
    ParamCurve,
    polyline_length,
    polyline_min_dist,
    reparam_to_interval,
)
from cantorarc.defining import DefiningTree, TreeNode, Word
from cantorarc.errors import NoPath, SeparationFailure
from cantorarc.geometry import GridRegion, STRUCT4
from cantorarc.intervals import IKey, IntervalTree
from cantorarc.pathfind import (
    astar,
    dilate_blocked,
    hug_penalty,
    nearest_free_cell,
    shortcut,
    supercover_cells,
)

BallKey = Tuple[Word, str]  # (node word, "X" | "Y")

R_PORT_CELLS = 2.0
# protection disks must cover the largest port radius (R_PORT_CELLS + 2)
# with margin: the anchor-to-port spoke is the one polyline stretch A*
# never validates, so no foreign path may enter its reach
PROTECT_CELLS = 5.5
N_PORT_ANGLES = 16

# Routed walls stay this many cells off the neighborhood rim except near
# their own ports.  An arc attached to the rim only at its endpoints leaves
# the wrap-around passages every later piece relies on, mirroring the fact
# that an arc never separates the plane away from its endpoints.
RIM_FLOOR_CELLS = 2.0
ATTACH_CELLS = R_PORT_CELLS + 4.0

# Default arc clearance as a fraction of eps_wi * diam U_wi (Lemma-2.9-style
# lambda = eps/8 usage).
CLEARANCE_FRACTION = 0.125


@dataclass
class ObstacleSet:
    curves: List[np.ndarray] = field(default_factory=list)  # vertex arrays
    regions: List[GridRegion] = field(default_factory=list)
    clearance: float = 0.0

    def __post_init__(self):
        assert self.clearance >= 0.0


@dataclass
class BallUse:
    anchor: np.ndarray
    port_angle: float
    port_point: np.ndarray
    user: IKey


@dataclass
class ArcPiece:
    key: IKey  # (wi, j): gap interval this piece lives on
    owner: Word  # w with h_w ∋ this piece
    curve: ParamCurve  # parameterized over Î_{wi,j}
    start_ball: BallKey
    goal_ball: BallKey
    start_port: BallUse
    goal_port: BallUse
    clearance_used: float
    length_ratio: float  # length / d(endpoints)

    @property
    def vertices(self) -> np.ndarray:
        return self.curve.vertices


@dataclass
class ArcSystem:
    pieces: Dict[IKey, ArcPiece] = field(default_factory=dict)
    by_owner: Dict[Word, List[IKey]] = field(default_factory=dict)
    ball_uses: Dict[BallKey, List[BallUse]] = field(default_factory=dict)
    build_order: List[IKey] = field(default_factory=list)
    beta_star: float = math.nan
    eta_measured: float = math.nan
    separation_fraction: float = math.nan
    L_by_word: Dict[Word, float] = field(default_factory=dict)
    max_speed_by_word: Dict[Word, float] = field(default_factory=dict)
    min_speed_by_word: Dict[Word, float] = field(default_factory=dict)

    def owners(self) -> List[Word]:
        return sorted(self.by_owner.keys(), key=lambda w: (len(w), w))

    def anchor_of(self, ball: BallKey, user: IKey) -> np.ndarray:
        for use in self.ball_uses.get(ball, []):
            if use.user == user:
                return use.anchor
        raise KeyError(f"no registered use of {ball} by {user}")


def ball_center(tree: DefiningTree, ball: BallKey) -> np.ndarray:
    node = tree.node(ball[0])
    b = node.X_w if ball[1] == "X" else node.Y_w
    return np.array([b.center.x, b.center.y])


def ball_radius(tree: DefiningTree, ball: BallKey) -> float:
    node = tree.node(ball[0])
    return (node.X_w if ball[1] == "X" else node.Y_w).radius


def all_ball_keys(tree: DefiningTree) -> List[BallKey]:
    out = []
    for w in tree.words():
        if tree.node(w).X_w is not None:
            out.append((w, "X"))
            out.append((w, "Y"))
    return out


def world_to_cell(grid: GridRegion, p) -> Tuple[int, int]:
    ix = int((p[0] - grid.origin.x) / grid.cell)
    iy = int((p[1] - grid.origin.y) / grid.cell)
    return (iy, ix)


def cell_to_world(grid: GridRegion, c) -> np.ndarray:
    iy, ix = c
    return np.array(
        [grid.origin.x + (ix + 0.5) * grid.cell, grid.origin.y + (iy + 0.5) * grid.cell]
    )


# tie tolerance for world-space rasterization, in cell units; coordinates in
# cell space stay below ~1e3 so double rounding is orders below this
RASTER_TOL = 1e-9


def _mark_near(blocked: np.ndarray, v: float, u: float):
    """Block every cell whose closed square could contain the point (v, u)
    given in cell coordinates (v = row, u = column, both fractional)."""
    h, w = blocked.shape
    for vv in (v - RASTER_TOL, v + RASTER_TOL):
        iy = int(math.floor(vv))
        if iy < 0 or iy >= h:
            continue
        for uu in (u - RASTER_TOL, u + RASTER_TOL):
            ix = int(math.floor(uu))
            if 0 <= ix < w:
                blocked[iy, ix] = True


def _rasterize_segment(blocked: np.ndarray, u0, v0, u1, v1):
    """Block all cells the world segment touches, in cell coordinates.

    Vertices from a foreign grid are generic points here, so quantizing them
    to cells first would underestimate coverage; instead every gridline
    crossing is marked on both sides (and on both corner sides at ties)."""
    h, w = blocked.shape
    if max(u0, u1) < -1 or min(u0, u1) > w + 1 or max(v0, v1) < -1 or min(v0, v1) > h + 1:
        return
    _mark_near(blocked, v0, u0)
    _mark_near(blocked, v1, u1)
    du, dv = u1 - u0, v1 - v0
    if du != 0.0:
        lo, hi = (u0, u1) if u0 < u1 else (u1, u0)
        # gridline k borders cells k-1 and k: only k in [0, w] can mark
        for k in range(max(int(math.floor(lo)) + 1, 0), min(int(math.floor(hi)), w) + 1):
            t = (k - u0) / du
            _mark_near(blocked, v0 + t * dv, float(k))
    if dv != 0.0:
        lo, hi = (v0, v1) if v0 < v1 else (v1, v0)
        for k in range(max(int(math.floor(lo)) + 1, 0), min(int(math.floor(hi)), h) + 1):
            t = (k - v0) / dv
            _mark_near(blocked, float(k), u0 + t * du)


def rasterize_curves(grid: GridRegion, curves: List[np.ndarray]) -> np.ndarray:
    """Cells touched by any of the given polylines (bbox-prefiltered)."""
    blocked = np.zeros((grid.height, grid.width), dtype=bool)
    x0, y0, x1, y1 = grid.bbox()
    inv = 1.0 / grid.cell
    for verts in curves:
        if (
            verts[:, 0].max() < x0
            or verts[:, 0].min() > x1
            or verts[:, 1].max() < y0
            or verts[:, 1].min() > y1
        ):
            continue
        us = (verts[:, 0] - grid.origin.x) * inv
        vs = (verts[:, 1] - grid.origin.y) * inv
        for i in range(len(verts) - 1):
            _rasterize_segment(blocked, us[i], vs[i], us[i + 1], vs[i + 1])
    return blocked


def block_disks(grid: GridRegion, centers: List[np.ndarray], radius_cells: float) -> np.ndarray:
    blocked = np.zeros((grid.height, grid.width), dtype=bool)
    r = int(math.ceil(radius_cells))
    for c in centers:
        cy, cx = world_to_cell(grid, c)
        if cy < -r or cy >= grid.height + r or cx < -r or cx >= grid.width + r:
            continue
        y0, y1 = max(cy - r, 0), min(cy + r + 1, grid.height)
        x0, x1 = max(cx - r, 0), min(cx + r + 1, grid.width)
        for iy in range(y0, y1):
            for ix in range(x0, x1):
                if (iy - cy) ** 2 + (ix - cx) ** 2 <= radius_cells**2:
                    blocked[iy, ix] = True
    return blocked


def pathfind_avoiding(
    region: GridRegion, start, goal, obstacles: ObstacleSet
) -> ParamCurve:
    """Clearance-respecting polyline between two balls inside a region.

    start/goal are Balls (or bare points); the path keeps obstacle
    clearance and is greedily shortcut.  Parameterized over [0, 1].
    """
    from cantorarc.geometry import Ball

    def center(b):
        if isinstance(b, Ball):
            return np.array([b.center.x, b.center.y])
        return np.asarray(b, dtype=float)

    p0, p1 = center(start), center(goal)
    blocked = rasterize_curves(region, obstacles.curves)
    for obs in obstacles.regions:
        blocked |= mask_of_other(region, obs)
    clearance_cells = obstacles.clearance / region.cell
    free = region.occupancy & ~dilate_blocked(blocked, clearance_cells)
    c0 = nearest_free_cell(free, world_to_cell(region, p0), max_radius=4)
    c1 = nearest_free_cell(free, world_to_cell(region, p1), max_radius=4)
    if c0 is None or c1 is None:
        raise NoPath("ball center has no free cell within reach")
    path = shortcut(astar(free, c0, c1, penalty=hug_penalty(free)), free)
    verts = [p0] + [cell_to_world(region, c) for c in path] + [p1]
    return reparam_to_interval(np.asarray(verts), Fraction(0), Fraction(1))


def mask_of_other(grid: GridRegion, other: GridRegion) -> np.ndarray:
    from cantorarc.defining import mask_of_region_on

    return mask_of_region_on(grid, other)


def _port_candidates(
    system: ArcSystem,
    tree: DefiningTree,
    ball: BallKey,
    grid: GridRegion,
    free: np.ndarray,
    labels: np.ndarray,
    toward: np.ndarray,
):
    """Feasible (score, angle, port point, component label) port slots.

    Scores favor angular distance from earlier users of the same ball (or
    alignment with the direction of travel for a fresh ball)."""
    center = ball_center(tree, ball)
    uses = system.ball_uses.get(ball, [])
    base = math.atan2(toward[1] - center[1], toward[0] - center[0])
    out = []
    for r_cells in (R_PORT_CELLS, R_PORT_CELLS + 1, R_PORT_CELLS + 2):
        for k in range(N_PORT_ANGLES):
            ang = base + 2.0 * math.pi * k / N_PORT_ANGLES
            port = center + r_cells * grid.cell * np.array(
                [math.cos(ang), math.sin(ang)]
            )
            cy, cx = world_to_cell(grid, port)
            if not (0 <= cy < grid.height and 0 <= cx < grid.width and free[cy, cx]):
                continue
            lab = _nearby_label(labels, cy, cx)
            if lab == 0:
                continue
            # snap to the cell center so the port-to-path segment is exactly
            # the line the router validated
            port = cell_to_world(grid, (cy, cx))
            if uses:
                sep = min(
                    abs(math.remainder(ang - u.port_angle, 2.0 * math.pi))
                    for u in uses
                )
            else:
                sep = math.pi - abs(math.remainder(ang - base, 2.0 * math.pi))
            out.append((sep - 0.1 * (r_cells - R_PORT_CELLS), ang, port, lab))
    if not out:
        raise NoPath(f"no free port cell around ball {ball}")
    return out


def _attach_zone(route: np.ndarray, free: np.ndarray, cell, radius: float = ATTACH_CELLS):
    """Open the rim band to a piece's own port: free cells within `radius`
    of the port cell join the routing mask so the path can reach the rim
    there and only there."""
    cy, cx = cell
    r = int(math.ceil(radius))
    y0, y1 = max(cy - r, 0), min(cy + r + 1, route.shape[0])
    x0, x1 = max(cx - r, 0), min(cx + r + 1, route.shape[1])
    ys, xs = np.ogrid[y0:y1, x0:x1]
    disk = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius**2
    route[y0:y1, x0:x1] |= free[y0:y1, x0:x1] & disk


def _nearby_label(labels: np.ndarray, cy: int, cx: int, radius: int = 2) -> int:
    """Component label at a cell, or of the nearest labeled cell in a small
    window (ports may sit in the rim band excluded from the routing core)."""
    if labels[cy, cx]:
        return int(labels[cy, cx])
    h, w = labels.shape
    win = labels[max(cy - radius, 0):cy + radius + 1, max(cx - radius, 0):cx + radius + 1]
    ys, xs = np.nonzero(win)
    if len(ys) == 0:
        return 0
    oy, ox = max(cy - radius, 0), max(cx - radius, 0)
    d2 = (ys + oy - cy) ** 2 + (xs + ox - cx) ** 2
    k = int(np.argmin(d2))
    return int(win[ys[k], xs[k]])


def _register_port(system: ArcSystem, tree, ball: BallKey, user: IKey, cand) -> BallUse:
    """Commit a chosen slot: first user anchors at the ball center, later
    users offset half a radius along their own spoke."""
    _, ang, port, _ = cand
    center = ball_center(tree, ball)
    radius = ball_radius(tree, ball)
    uses = system.ball_uses.setdefault(ball, [])
    if uses:
        anchor = center + 0.5 * radius * np.array([math.cos(ang), math.sin(ang)])
    else:
        anchor = center.copy()
    use = BallUse(anchor=anchor, port_angle=ang, port_point=port, user=user)
    uses.append(use)
    return use


def _anchor_for(system: ArcSystem, tree, ball: BallKey, ang: float) -> np.ndarray:
    """Anchor a candidate slot would get, without committing it."""
    center = ball_center(tree, ball)
    if system.ball_uses.get(ball):
        radius = ball_radius(tree, ball)
        return center + 0.5 * radius * np.array([math.cos(ang), math.sin(ang)])
    return center.copy()


def _crosses_prior(verts: np.ndarray, priors: List[np.ndarray]) -> bool:
    """True if the candidate polyline touches any earlier piece.

    Ball anchors sit orders of magnitude below the grid pitch, so a route
    that looks clean on the occupancy raster can still sweep through a
    neighbor's sub-cell attach geometry; this is the exact world-space
    gate."""
    for pv in priors:
        if _bbox_gap(verts, pv) > 0.0:
            continue
        if polyline_min_dist(verts, pv) <= 0.0:
            return True
    return False


def _piece_ball_keys(n_wi: int, wi: Word, j: int) -> Tuple[BallKey, BallKey]:
    start = (wi, "X") if j == 0 else (wi + (j,), "Y")
    goal = (wi, "Y") if j == n_wi else (wi + (j + 1,), "X")
    return start, goal


def _build_piece(
    tree: DefiningTree,
    system: ArcSystem,
    owner: Word,
    key: IKey,
    domain,
    clearance_fraction: float,
) -> ArcPiece:
    wi, j = key
    node = tree.node(wi)
    grid = node.region
    n_wi = node.n_children
    start_ball, goal_ball = _piece_ball_keys(n_wi, wi, j)

    prior = [system.pieces[k].vertices for k in system.build_order]
    blocked = rasterize_curves(grid, prior)
    protect = [
        ball_center(tree, b)
        for b in all_ball_keys(tree)
        if b not in (start_ball, goal_ball)
    ]
    blocked |= block_disks(grid, protect, PROTECT_CELLS)
    clearance = clearance_fraction * node.eps_w * node.diam_U
    rim_dist = ndimage.distance_transform_edt(node.nbhd_mask)
    goal_center = ball_center(tree, goal_ball)
    start_center = ball_center(tree, start_ball)

    clear_cells = clearance / grid.cell
    ladder = [(max(clear_cells, 1.5), RIM_FLOOR_CELLS)]
    if clear_cells < ladder[0][0]:
        ladder.append((clear_cells, RIM_FLOOR_CELLS))
    if ladder[-1][0] > 0.0:
        ladder.append((0.0, RIM_FLOOR_CELLS))
    # last resort: the wrap-around passages between walls and the rim are
    # the only connections left, so allow routing through the rim band
    ladder.append((0.0, 0.0))
    found = last_exc = None
    for wall_clear, rim_floor in ladder:
        free = node.nbhd_mask & ~dilate_blocked(blocked, wall_clear)
        core = free & (rim_dist >= rim_floor) if rim_floor > 0 else free.copy()
        # no-corner-cutting diagonal moves have plain 4-connectivity reachability
        labels, _ = ndimage.label(core, structure=STRUCT4)
        try:
            cand_s = _port_candidates(system, tree, start_ball, grid, free, labels, goal_center)
            cand_g = _port_candidates(system, tree, goal_ball, grid, free, labels, start_center)
            # co-reachable slot pairs, best separation score first
            ranked = sorted(
                (
                    (cs[0] + cg[0], cs, cg)
                    for cs in cand_s
                    for cg in cand_g
                    if cs[3] == cg[3]
                ),
                key=lambda t: t[0],
                reverse=True,
            )
            if not ranked:
                raise NoPath("no co-reachable port pair")
            for pair in ranked[:10]:
                c0 = world_to_cell(grid, pair[1][2])
                c1 = world_to_cell(grid, pair[2][2])
                route = core.copy()
                _attach_zone(route, free, c0)
                _attach_zone(route, free, c1)
                # mid-corridor routing: a path hugging walls or the rim
                # would fence off the ports of pieces built later here
                clear_field = ndimage.distance_transform_edt(route)
                try:
                    path = shortcut(
                        astar(route, c0, c1,
                              penalty=hug_penalty(route, margin=3.0, weight=0.5)),
                        route,
                        clearance=clear_field,
                        floor=max(clear_cells, 2.0),
                    )
                except NoPath as exc:
                    last_exc = exc
                    continue
                cand_verts = np.asarray(
                    [_anchor_for(system, tree, start_ball, pair[1][1])]
                    + [cell_to_world(grid, c) for c in path]
                    + [_anchor_for(system, tree, goal_ball, pair[2][1])]
                )
                if _crosses_prior(cand_verts, prior):
                    last_exc = NoPath("route crosses an earlier piece")
                    continue
                found = (pair, path)
                break
            if found is None:
                raise NoPath(f"all port pairs failed: {last_exc}")
            break
        except NoPath as exc:
            last_exc = exc
    if found is None:
        raise NoPath(f"piece {key} of h_{owner}: {last_exc}", context=(owner, wi, j))
    pair, path = found
    use_s = _register_port(system, tree, start_ball, key, pair[1])
    use_g = _register_port(system, tree, goal_ball, key, pair[2])
    verts = (
        [use_s.anchor]
        + [cell_to_world(grid, c) for c in path]
        + [use_g.anchor]
    )
    verts = np.asarray(verts)
    curve = reparam_to_interval(verts, domain.lo, domain.hi)
    d_end = float(np.hypot(*(use_g.anchor - use_s.anchor)))
    piece = ArcPiece(
        key=key,
        owner=owner,
        curve=curve,
        start_ball=start_ball,
        goal_ball=goal_ball,
        start_port=use_s,
        goal_port=use_g,
        clearance_used=clearance,
        length_ratio=curve.length / d_end if d_end > 0 else math.inf,
    )
    return piece


def owner_rows(tree: DefiningTree, intervals: IntervalTree) -> Dict[Word, List[Word]]:
    """Map h-owner word w -> its subdivided children wi (rows of pieces)."""
    rows: Dict[Word, List[Word]] = {}
    for w in tree.words():
        kids = [wi for wi in tree.children(w) if intervals.subdivided(wi)]
        if kids:
            rows[w] = kids
    return rows


def build_generation(
    tree: DefiningTree,
    intervals: IntervalTree,
    parity: str,
    system: ArcSystem,
    clearance_fraction: float = CLEARANCE_FRACTION,
) -> ArcSystem:
    """Build all h_w pieces for words of one parity (even/odd |w|).

    Pieces build in deterministic word order, each avoiding everything built
    before it (within both parities), so the odd pass automatically avoids
    the even one.
    """
    assert parity in ("even", "odd")
    want = 0 if parity == "even" else 1
    rows = owner_rows(tree, intervals)
    for w in sorted(rows, key=lambda w: (len(w), w)):
        if len(w) % 2 != want:
            continue
        keys = []
        for wi in rows[w]:
            n_wi = tree.node(wi).n_children
            for j in range(n_wi + 1):
                key = (wi, j)
                piece = _build_piece(
                    tree, system, w, key, intervals.Ihat[key], clearance_fraction
                )
                system.pieces[key] = piece
                system.build_order.append(key)
                keys.append(key)
        system.by_owner.setdefault(w, []).extend(keys)
    return system


def build_arcs(
    tree: DefiningTree,
    intervals: IntervalTree,
    clearance_fraction: float = CLEARANCE_FRACTION,
    separation_fraction: Optional[float] = None,
) -> ArcSystem:
    """Both parity passes plus the post-build measurements."""
    system = ArcSystem()
    build_generation(tree, intervals, "even", system, clearance_fraction)
    build_generation(tree, intervals, "odd", system, clearance_fraction)
    measure_system(tree, system, separation_fraction)
    return system


def default_separation_fraction(tree: DefiningTree) -> float:
    """Configured arc-separation fraction: parent and child arcs meet at
    shared balls whose radius is eps*rho*diam/12 of the (smaller) child, so
    the guaranteed fraction carries delta for the child/parent diam ratio."""
    eps_min = min(
        tree.node(w).eps_w for w in tree.words() if not math.isnan(tree.node(w).eps_w)
    )
    rho_min = min(
        tree.node(w).rho_parent
        for w in tree.words()
        if not math.isnan(tree.node(w).rho_parent)
    )
    return tree.delta * eps_min * rho_min / 100.0


def _bbox_gap(A: np.ndarray, B: np.ndarray) -> float:
    dx = max(B[:, 0].min() - A[:, 0].max(), A[:, 0].min() - B[:, 0].max(), 0.0)
    dy = max(B[:, 1].min() - A[:, 1].max(), A[:, 1].min() - B[:, 1].max(), 0.0)
    return math.hypot(dx, dy)


def piece_pair_distance(a: ArcPiece, b: ArcPiece, cutoff: float) -> float:
    """Min distance between two pieces; returns the bbox lower bound when it
    already exceeds the cutoff."""
    gap = _bbox_gap(a.vertices, b.vertices)
    if gap > cutoff:
        return gap
    return polyline_min_dist(a.vertices, b.vertices)


def word_pair_distance(system: ArcSystem, w: Word, v: Word, cutoff: float) -> float:
    best = math.inf
    for ka in system.by_owner.get(w, []):
        for kb in system.by_owner.get(v, []):
            best = min(
                best,
                piece_pair_distance(system.pieces[ka], system.pieces[kb], cutoff),
            )
    return best


def measure_system(
    tree: DefiningTree, system: ArcSystem, separation_fraction: Optional[float] = None
):
    """Attach beta*, eta, and per-word quasisimilarity measurements."""
    if separation_fraction is None:
        separation_fraction = default_separation_fraction(tree)
    system.separation_fraction = separation_fraction

    # per-word quasisimilarity constants on subsampled vertex/parameter pairs
    for w, keys in system.by_owner.items():
        ts, vs, speeds = [], [], []
        for k in sorted(keys, key=lambda k: system.pieces[k].curve.t0):
            c = system.pieces[k].curve
            tf = np.array([float(t) for t in c.breakpoints])
            seg = np.hypot(*np.diff(c.vertices, axis=0).T)
            dt = np.diff(tf)
            ok = (seg > 0) & (dt > 0)
            speeds.extend((seg[ok] / dt[ok]).tolist())
            step = max(1, len(c.vertices) // 40)
            idx = list(range(0, len(c.vertices), step)) + [len(c.vertices) - 1]
            for i in sorted(set(idx)):
                ts.append(tf[i])
                vs.append(c.vertices[i])
        vs = np.asarray(vs)
        ts = np.asarray(ts)
        d = np.hypot(vs[:, None, 0] - vs[None, :, 0], vs[:, None, 1] - vs[None, :, 1])
        dt = np.abs(ts[:, None] - ts[None, :])
        iu = np.triu_indices(len(vs), k=1)
        d, dt = d[iu], dt[iu]
        sel = (dt > 0) & (d > 0)
        ratios = d[sel] / dt[sel]
        system.L_by_word[w] = float(ratios.max() / ratios.min())
        system.max_speed_by_word[w] = float(max(speeds))
        system.min_speed_by_word[w] = float(min(speeds))

    # beta*: min clearance ratio of each piece against everything built
    # before it (the piece's obstacle set)
    beta = math.inf
    order = system.build_order
    for n, k in enumerate(order):
        piece = system.pieces[k]
        diam_wi = tree.node(k[0]).diam_U
        cutoff = diam_wi
        for kb in order[:n]:
            d = piece_pair_distance(piece, system.pieces[kb], cutoff)
            beta = min(beta, d / diam_wi)
    system.beta_star = beta if math.isfinite(beta) else 1.0

    # eta: parent/child word separation relative to min diam
    eta = math.inf
    owners = system.owners()
    for w in owners:
        for v in owners:
            if len(v) != len(w) + 1 or v[: len(w)] != w:
                continue
            md = min(tree.node(w).diam_U, tree.node(v).diam_U)
            d = word_pair_distance(system, w, v, md)
            eta = min(eta, d / md)
    system.eta_measured = eta


def verify_pairwise_disjoint(system: ArcSystem) -> float:
    """Min distance over all piece pairs (0 means an intersection)."""
    worst = math.inf
    keys = system.build_order
    for a in range(len(keys)):
        pa = system.pieces[keys[a]]
        for b in range(a + 1, len(keys)):
            pb = system.pieces[keys[b]]
            d = piece_pair_distance(pa, pb, cutoff=worst if math.isfinite(worst) else 1.0)
            worst = min(worst, d)
            if worst == 0.0:
                return 0.0
    return worst


def arcs_to_json(system: ArcSystem) -> dict:
    def wkey(w):
        return ".".join(map(str, w)) if w else "eps"

    out = {}
    for key, piece in system.pieces.items():
        c = piece.curve
        out[f"{wkey(key[0])}:{key[1]}"] = {
            "owner": wkey(piece.owner),
            "breakpoints": [[t.numerator, t.denominator] for t in c.breakpoints],
            "vertices": c.vertices.tolist(),
            "start_ball": [wkey(piece.start_ball[0]), piece.start_ball[1]],
            "goal_ball": [wkey(piece.goal_ball[0]), piece.goal_ball[1]],
        }
    return {
        "pieces": out,
        "beta_star": system.beta_star,
        "eta_measured": system.eta_measured,
        "L_by_word": {wkey(w): v for w, v in system.L_by_word.items()},
    }
