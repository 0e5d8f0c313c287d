"""Post-conditions of the per-word arc system on the depth-3 pipeline."""

import math

import numpy as np
import pytest

from cantorarc.arcs import (
    ball_center,
    ball_radius,
    rasterize_curves,
    verify_pairwise_disjoint,
)
from cantorarc.pathfind import supercover_cells


def test_pieces_join_prescribed_balls_in_order(pipeline3):
    tree, intervals, system = pipeline3
    for w, keys in system.by_owner.items():
        for wi in {k[0] for k in keys}:
            n = tree.node(wi).n_children
            row = sorted((k for k in keys if k[0] == wi), key=lambda k: k[1])
            assert [k[1] for k in row] == list(range(n + 1))
            for key in row:
                p = system.pieces[key]
                j = key[1]
                # entry of the row starts at X_wi, exit ends at Y_wi, and
                # interior pieces bridge consecutive children's Y -> X
                assert p.start_ball == ((wi, "X") if j == 0 else (wi + (j,), "Y"))
                assert p.goal_ball == ((wi, "Y") if j == n else (wi + (j + 1,), "X"))


def test_piece_endpoints_inside_their_balls(pipeline3):
    tree, intervals, system = pipeline3
    for p in system.pieces.values():
        for ball, v in ((p.start_ball, p.vertices[0]), (p.goal_ball, p.vertices[-1])):
            c = ball_center(tree, ball)
            r = ball_radius(tree, ball)
            assert np.hypot(*(v - c)) <= r + 1e-12


def test_piece_domain_is_its_interval(pipeline3):
    tree, intervals, system = pipeline3
    for key, p in system.pieces.items():
        ih = intervals.Ihat[key]
        assert p.curve.t0 == ih.lo and p.curve.t1 == ih.hi


def test_pieces_pairwise_disjoint(pipeline3):
    tree, intervals, system = pipeline3
    assert verify_pairwise_disjoint(system) > 0.0


def test_separation_meets_configured_fraction(pipeline3):
    tree, intervals, system = pipeline3
    assert math.isfinite(system.separation_fraction)
    assert system.separation_fraction > 0.0
    assert system.beta_star >= system.separation_fraction
    assert system.eta_measured >= system.separation_fraction


def test_quasisimilarity_constants_finite(pipeline3):
    tree, intervals, system = pipeline3
    assert system.L_by_word
    for w, L in system.L_by_word.items():
        assert math.isfinite(L) and L >= 1.0
        assert system.min_speed_by_word[w] > 0.0
        assert system.max_speed_by_word[w] >= system.min_speed_by_word[w]


def test_pieces_stay_in_owner_collar(pipeline3):
    tree, intervals, system = pipeline3
    for key, p in system.pieces.items():
        mask = tree.node(key[0]).nbhd_mask
        grid = tree.node(key[0]).region
        # every interior vertex sits on a collar cell (anchors may sit just
        # inside the ball, whose protective zone is carved out separately)
        for v in p.vertices[1:-1]:
            ix = int((v[0] - grid.origin.x) / grid.cell)
            iy = int((v[1] - grid.origin.y) / grid.cell)
            assert 0 <= ix < grid.width and 0 <= iy < grid.height
            assert mask[iy, ix]


def test_ball_use_registry_consistent(pipeline3):
    tree, intervals, system = pipeline3
    for ball, uses in system.ball_uses.items():
        r = ball_radius(tree, ball)
        c = ball_center(tree, ball)
        for use in uses:
            assert use.user in system.pieces
            assert np.hypot(*(use.anchor - c)) <= r + 1e-12
        # two users of one ball never share an anchor
        for i in range(len(uses)):
            for j in range(i + 1, len(uses)):
                assert np.hypot(*(uses[i].anchor - uses[j].anchor)) > 0.0


def test_rasterize_curves_covers_polyline(pipeline3):
    tree, intervals, system = pipeline3
    wi = next(iter(system.pieces))[0]
    grid = tree.node(wi).region
    verts = system.pieces[next(iter(system.pieces))].vertices
    blocked = rasterize_curves(grid, [verts])
    # every vertex inside the grid lands on a blocked cell
    for v in verts:
        ix = int((v[0] - grid.origin.x) / grid.cell)
        iy = int((v[1] - grid.origin.y) / grid.cell)
        if 0 <= ix < grid.width and 0 <= iy < grid.height:
            assert blocked[iy, ix]


def test_build_order_even_generation_first(pipeline3):
    tree, intervals, system = pipeline3
    parities = [len(system.pieces[k].owner) % 2 for k in system.build_order]
    flips = sum(a != b for a, b in zip(parities, parities[1:]))
    assert flips == 1  # one even block then one odd block
