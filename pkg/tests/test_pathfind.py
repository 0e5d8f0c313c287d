import heapq
import math
from fractions import Fraction

import numpy as np
import pytest

from cantorarc.errors import NoPath
from cantorarc.pathfind import (
    astar,
    dilate_blocked,
    hug_penalty,
    line_free,
    nearest_free_cell,
    shortcut,
    supercover_cells,
)

SQRT2 = math.sqrt(2.0)


def segment_cells_oracle(c0, c1):
    """Cells whose closed unit square the center segment meets, by exact
    rational parameter sweep over all gridline crossings."""
    y0, x0 = c0
    y1, x1 = c1
    cells = set()
    ts = {Fraction(0), Fraction(1)}
    dy, dx = y1 - y0, x1 - x0
    if dx:
        lo, hi = sorted((x0, x1))
        for k in range(lo, hi):
            ts.add(Fraction(2 * k + 1 - 2 * x0, 2 * dx))  # crossing x=k+1/2
    if dy:
        lo, hi = sorted((y0, y1))
        for k in range(lo, hi):
            ts.add(Fraction(2 * k + 1 - 2 * y0, 2 * dy))
    ts = sorted(ts)
    for ta, tb in zip(ts, ts[1:]):
        tm = (ta + tb) / 2
        y = y0 + tm * dy
        x = x0 + tm * dx
        cells.add((math.floor(y + Fraction(1, 2)), math.floor(x + Fraction(1, 2))))
    # corner crossings: both side cells
    for t in ts:
        y = y0 + t * dy
        x = x0 + t * dx
        on_y = (y - Fraction(1, 2)).denominator == 1
        on_x = (x - Fraction(1, 2)).denominator == 1
        if on_y and on_x and 0 < t < 1:
            yy = int(y - Fraction(1, 2))
            xx = int(x - Fraction(1, 2))
            s_y = 1 if dy > 0 else -1
            s_x = 1 if dx > 0 else -1
            cells.add((yy + (s_y + 1) // 2, xx + (1 - s_x) // 2))
            cells.add((yy + (1 - s_y) // 2, xx + (s_x + 1) // 2))
    return cells


def test_supercover_matches_exact_oracle():
    rng = np.random.default_rng(0)
    for _ in range(300):
        c0 = tuple(int(v) for v in rng.integers(-6, 7, 2))
        c1 = tuple(int(v) for v in rng.integers(-6, 7, 2))
        got = set(supercover_cells(c0, c1))
        want = segment_cells_oracle(c0, c1)
        assert got == want, (c0, c1)


def test_supercover_corner_tie_lists_both_sides():
    cells = set(supercover_cells((0, 0), (2, 2)))
    # the diagonal passes exactly through the corners between the cells
    assert {(0, 1), (1, 0), (1, 2), (2, 1)} <= cells


def test_supercover_reversal_symmetric():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c0 = tuple(int(v) for v in rng.integers(0, 9, 2))
        c1 = tuple(int(v) for v in rng.integers(0, 9, 2))
        assert set(supercover_cells(c0, c1)) == set(supercover_cells(c1, c0))


def dijkstra_oracle(free, start, goal):
    """Same movement rules as astar: 8-connected, no corner cutting."""
    h, w = free.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == goal:
            return d
        if d > dist.get(u, np.inf):
            continue
        uy, ux = u
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == dx == 0:
                    continue
                ny, nx = uy + dy, ux + dx
                if not (0 <= ny < h and 0 <= nx < w and free[ny, nx]):
                    continue
                if dy and dx and not (free[uy, nx] and free[ny, ux]):
                    continue
                nd = d + (SQRT2 if dy and dx else 1.0)
                if nd < dist.get((ny, nx), np.inf):
                    dist[(ny, nx)] = nd
                    heapq.heappush(heap, (nd, (ny, nx)))
    return None


def path_cost(path):
    return sum(
        SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0
        for a, b in zip(path, path[1:])
    )


def random_maze(rng, h=18, w=18, p=0.35):
    return rng.random((h, w)) > p


def test_astar_optimal_against_dijkstra():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 25:
        free = random_maze(rng)
        ys, xs = np.nonzero(free)
        if len(ys) < 2:
            continue
        i, j = rng.integers(0, len(ys), 2)
        start = (int(ys[i]), int(xs[i]))
        goal = (int(ys[j]), int(xs[j]))
        want = dijkstra_oracle(free, start, goal)
        if want is None:
            with pytest.raises(NoPath):
                astar(free, start, goal)
        else:
            path = astar(free, start, goal)
            assert path[0] == start and path[-1] == goal
            for a, b in zip(path, path[1:]):
                assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1
                assert free[b]
                if a[0] != b[0] and a[1] != b[1]:
                    assert free[a[0], b[1]] and free[b[0], a[1]]
            assert path_cost(path) == pytest.approx(want, abs=1e-9)
        checked += 1


def test_astar_penalty_pushes_off_walls():
    free = np.ones((9, 30), dtype=bool)
    free[0, :] = False  # wall along the top
    start, goal = (1, 1), (1, 28)
    plain = astar(free, start, goal)
    pushed = astar(free, start, goal, penalty=hug_penalty(free, margin=4, weight=5))
    assert max(y for y, _ in plain) <= max(y for y, _ in pushed)


def test_line_free_and_shortcut_validity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        free = random_maze(rng, p=0.25)
        ys, xs = np.nonzero(free)
        i, j = rng.integers(0, len(ys), 2)
        start = (int(ys[i]), int(xs[i]))
        goal = (int(ys[j]), int(xs[j]))
        try:
            path = astar(free, start, goal)
        except NoPath:
            continue
        short = shortcut(path, free)
        assert short[0] == start and short[-1] == goal
        assert len(short) <= len(path)
        for a, b in zip(short, short[1:]):
            assert line_free(free, a, b)


def test_shortcut_clearance_guard():
    # wide room with a wall; mid-room path must not be pulled against it
    free = np.ones((15, 40), dtype=bool)
    free[7, 5:35] = False
    start, goal = (3, 2), (3, 37)
    path = astar(free, start, goal, penalty=hug_penalty(free, margin=4))
    clear = np.asarray(
        __import__("scipy.ndimage", fromlist=["x"]).distance_transform_edt(free)
    )
    short = shortcut(path, free, clearance=clear)
    sub_min = min(clear[c] for c in path)
    for a, b in zip(short, short[1:]):
        for c in supercover_cells(a, b):
            assert clear[c] >= sub_min - 0.5


def test_nearest_free_cell():
    free = np.zeros((10, 10), dtype=bool)
    free[5, 7] = True
    assert nearest_free_cell(free, (5, 5)) == (5, 7)
    assert nearest_free_cell(free, (5, 7)) == (5, 7)
    assert nearest_free_cell(free, (0, 0), max_radius=2) is None
    # out-of-range query clamps into the grid
    assert nearest_free_cell(free, (-3, 25)) == (5, 7)


def test_dilate_blocked_clearance():
    blocked = np.zeros((20, 20), dtype=bool)
    blocked[10, 10] = True
    grown = dilate_blocked(blocked, 2.5)
    dist = __import__("scipy.ndimage", fromlist=["x"]).distance_transform_edt(~blocked)
    assert (grown == (dist < 2.5)).all()
    assert dilate_blocked(blocked, 0.0) is blocked
