"""Grid A* with clearance dilation and line-of-sight shortcutting.

Works on boolean free-space masks (True = traversable).  Paths are lists of
(iy, ix) cells; conversion to world coordinates is the caller's job.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy import ndimage

from cantorarc.errors import NoPath

SQRT2 = math.sqrt(2.0)


def nearest_free_cell(free: np.ndarray, cell_yx, max_radius: int = 0):
    """The free cell closest (Euclidean, in cells) to cell_yx, or None."""
    h, w = free.shape
    iy, ix = cell_yx
    iy = min(max(iy, 0), h - 1)
    ix = min(max(ix, 0), w - 1)
    if free[iy, ix]:
        return (iy, ix)
    if max_radius <= 0:
        max_radius = max(h, w)
    for r in range(1, max_radius + 1):
        y0, y1 = max(iy - r, 0), min(iy + r + 1, h)
        x0, x1 = max(ix - r, 0), min(ix + r + 1, w)
        sub = free[y0:y1, x0:x1]
        if sub.any():
            ys, xs = np.nonzero(sub)
            ys = ys + y0
            xs = xs + x0
            d2 = (ys - iy) ** 2 + (xs - ix) ** 2
            k = int(np.argmin(d2))
            return (int(ys[k]), int(xs[k]))
    return None


def astar(free: np.ndarray, start, goal, penalty: np.ndarray = None):
    """Shortest 8-connected path on the free mask (no corner cutting).

    Returns the cell path including both endpoints; raises NoPath when the
    endpoints lie in different free components.  `penalty` is an optional
    per-cell nonnegative cost multiplier excess: a step into cell v costs
    step_len * (1 + penalty[v]).  Used to keep paths away from obstacle
    walls so they do not seal off thin corridors for later paths.
    """
    h, w = free.shape
    sy, sx = start
    gy, gx = goal
    if not (free[sy, sx] and free[gy, gx]):
        raise NoPath("endpoint cell blocked")
    if start == goal:
        return [start]
    flat_free = free.ravel()
    flat_pen = None if penalty is None else penalty.ravel()
    start_i = sy * w + sx
    goal_i = gy * w + gx
    g = np.full(h * w, np.inf)
    g[start_i] = 0.0
    came = np.full(h * w, -1, dtype=np.int64)
    closed = np.zeros(h * w, dtype=bool)

    def heur(i):
        dy = abs(i // w - gy)
        dx = abs(i % w - gx)
        return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)

    heap = [(heur(start_i), start_i)]
    while heap:
        f, u = heapq.heappop(heap)
        if closed[u]:
            continue
        if u == goal_i:
            path = []
            while u != -1:
                path.append((u // w, u % w))
                u = came[u]
            return path[::-1]
        closed[u] = True
        uy, ux = u // w, u % w
        gu = g[u]
        for dy in (-1, 0, 1):
            ny = uy + dy
            if ny < 0 or ny >= h:
                continue
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                nx = ux + dx
                if nx < 0 or nx >= w:
                    continue
                v = ny * w + nx
                if not flat_free[v] or closed[v]:
                    continue
                if dy != 0 and dx != 0:
                    # forbid slipping through blocked corners
                    if not (free[uy, nx] and free[ny, ux]):
                        continue
                    step = SQRT2
                else:
                    step = 1.0
                if flat_pen is not None:
                    step *= 1.0 + flat_pen[v]
                ng = gu + step
                if ng < g[v]:
                    g[v] = ng
                    came[v] = u
                    heapq.heappush(heap, (ng + heur(v), v))
    raise NoPath("no path on dilated grid")


def supercover_cells(c0, c1):
    """All grid cells whose squares the center-to-center segment intersects.

    Exact integer traversal: a corner crossing yields both side cells, so
    two segments whose supercovers are disjoint can never intersect.
    """
    y0, x0 = c0
    y1, x1 = c1
    dy, dx = y1 - y0, x1 - x0
    ny, nx = abs(dy), abs(dx)
    sy = 1 if dy > 0 else -1
    sx = 1 if dx > 0 else -1
    y, x = y0, x0
    cells = [(y, x)]
    iy = ix = 0
    while iy < ny or ix < nx:
        # next vertical crossing at (ix+1/2)/nx, horizontal at (iy+1/2)/ny
        t1 = (2 * ix + 1) * ny
        t2 = (2 * iy + 1) * nx
        if t1 < t2:
            x += sx
            ix += 1
        elif t1 > t2:
            y += sy
            iy += 1
        else:
            cells.append((y, x + sx))
            cells.append((y + sy, x))
            y += sy
            x += sx
            iy += 1
            ix += 1
        cells.append((y, x))
    return cells


def line_free(free: np.ndarray, c0, c1) -> bool:
    h, w = free.shape
    for cy, cx in supercover_cells(c0, c1):
        if cy < 0 or cy >= h or cx < 0 or cx >= w or not free[cy, cx]:
            return False
    return True


def shortcut(path, free: np.ndarray, clearance: np.ndarray = None,
             floor: float = None):
    """Greedy line-of-sight simplification of a cell path.

    With a `clearance` field (distance-to-blocked, in cells), a shortcut is
    accepted only if it does not reduce the clearance the replaced subpath
    already had: taut straightening would otherwise pull mid-corridor paths
    back against the walls they were routed away from.  A `floor` relaxes
    that guard, letting straightening trade clearance down to `floor` cells.
    """
    if len(path) <= 2:
        return list(path)

    def ok(i, j):
        if not line_free(free, path[i], path[j]):
            return False
        if clearance is None:
            return True
        sub_min = min(clearance[c] for c in path[i:j + 1])
        need = sub_min - 0.5
        if floor is not None:
            need = min(need, floor)
        seg_min = min(clearance[c] for c in supercover_cells(path[i], path[j])
                      if 0 <= c[0] < free.shape[0] and 0 <= c[1] < free.shape[1])
        return seg_min >= need

    out = [path[0]]
    i = 0
    n = len(path)
    while i < n - 1:
        j = n - 1
        while j > i + 1 and not ok(i, j):
            j -= 1
        out.append(path[j])
        i = j
    return out


def hug_penalty(free: np.ndarray, margin: float = 6.0, weight: float = 3.0) -> np.ndarray:
    """Per-cell A* penalty pushing paths `margin` cells off the free-space
    boundary where room permits.  Zero beyond the margin, so shortest paths
    through genuinely narrow corridors are unaffected in direction, only in
    wall offset."""
    dist = ndimage.distance_transform_edt(free)
    pen = (margin - dist) / margin
    np.clip(pen, 0.0, 1.0, out=pen)
    return weight * pen


def dilate_blocked(blocked: np.ndarray, clearance_cells: float) -> np.ndarray:
    """Blocked mask inflated so free cell centers keep the given clearance
    (in cell units) from any originally blocked cell center."""
    if not blocked.any() or clearance_cells <= 0:
        return blocked
    dist = ndimage.distance_transform_edt(~blocked)
    return dist < clearance_cells
