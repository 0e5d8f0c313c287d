import math

import numpy as np
import pytest

from cantorarc.errors import DegenerateSet, PointNotInSet
from cantorarc.geometry import (
    GridRegion,
    Point,
    PointSet,
    bottleneck_costs,
    delta_chain_exists,
    diameter,
    fill_holes,
    neighborhood_components,
    region_from_points,
    uniform_disconnectedness,
)

def brute_chain_exists(coords, i, j, delta):
    """BFS over the threshold graph: hops <= delta * d(x_i, x_j)."""
    d = float(np.hypot(*(coords[i] - coords[j])))
    thresh = delta * d * (1 + 1e-15)
    n = len(coords)
    seen = {i}
    stack = [i]
    while stack:
        u = stack.pop()
        if u == j:
            return True
        for v in range(n):
            if v not in seen and np.hypot(*(coords[u] - coords[v])) <= thresh:
                seen.add(v)
                stack.append(v)
    return False


def test_delta_chain_matches_brute_force():
    rng = np.random.default_rng(7)
    for trial in range(50):
        n = int(rng.integers(2, 11))
        coords = rng.uniform(0, 1, size=(n, 2))
        E = PointSet(coords)
        for i in range(n):
            for j in range(i + 1, n):
                for delta in (0.1, 0.35, 0.8, 1.5):
                    got = delta_chain_exists(E, coords[i], coords[j], delta)
                    want = brute_chain_exists(coords, i, j, delta)
                    assert got == want, (trial, i, j, delta)


def middle_thirds(depth):
    """Endpoint sample of the middle-thirds construction at a finite depth."""
    xs = [0.0, 1.0]
    for _ in range(depth):
        xs = [x / 3 for x in xs] + [2 / 3 + x / 3 for x in xs]
    xs = sorted(set(xs))
    return PointSet(np.array([[x, 0.0] for x in xs]))


def test_uniform_disconnectedness_middle_thirds():
    E = middle_thirds(4)
    delta_star, witness = uniform_disconnectedness(E)
    assert abs(delta_star - 1 / 3) <= 1e-9
    # witness pair realizes the minimum and is chain-connected just above it
    assert delta_chain_exists(E, witness[0], witness[1], delta_star + 1e-9)


def test_delta_chain_monotone_in_delta():
    rng = np.random.default_rng(3)
    coords = rng.uniform(0, 1, size=(8, 2))
    E = PointSet(coords)
    for i in (0, 3):
        for j in (5, 7):
            prev = False
            for delta in (0.05, 0.2, 0.5, 1.0, 2.0):
                cur = delta_chain_exists(E, coords[i], coords[j], delta)
                assert cur or not prev  # once true, stays true
                prev = prev or cur


def test_delta_chain_requires_members():
    E = PointSet(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(PointNotInSet):
        delta_chain_exists(E, (0.0, 0.0), (0.5, 0.5), 0.5)


def test_uniform_disconnectedness_needs_two_points():
    with pytest.raises(DegenerateSet):
        uniform_disconnectedness(PointSet(np.array([[0.0, 0.0]])))


def test_bottleneck_costs_symmetric_and_tight():
    rng = np.random.default_rng(11)
    coords = rng.uniform(0, 1, size=(9, 2))
    costs = bottleneck_costs(coords)
    assert np.allclose(costs, costs.T)
    # bottleneck cost is at most the direct hop
    direct = np.hypot(
        coords[:, None, 0] - coords[None, :, 0],
        coords[:, None, 1] - coords[None, :, 1],
    )
    assert (costs <= direct + 1e-12).all()


def test_neighborhood_components_split():
    coords = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 0.0], [5.1, 0.0]])
    parts = neighborhood_components(PointSet(coords), eps=0.5)
    assert sorted(len(p) for p in parts) == [2, 2]


def test_diameter_matches_brute_force():
    rng = np.random.default_rng(2)
    coords = rng.uniform(-3, 3, size=(40, 2))
    brute = max(
        float(np.hypot(*(a - b))) for a in coords for b in coords
    )
    assert math.isclose(diameter(coords), brute, rel_tol=1e-12)


def test_region_from_points_contains_and_fill():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    region = region_from_points(coords, radius=0.3, grid_cells=64)
    region = fill_holes(region)
    assert region.contains(coords).all()
    assert region.cell > 0
    x0, y0, x1, y1 = region.bbox()
    assert x0 < 0 < 1 < x1 and y0 < 0 < 1 < y1


def test_grid_region_roundtrip():
    occ = np.zeros((8, 8), dtype=bool)
    occ[2:6, 2:6] = True
    region = GridRegion(Point(0.0, 0.0), 0.5, occ)
    centers = region.cell_centers()
    assert len(centers) == 16
    assert region.contains(centers).all()
