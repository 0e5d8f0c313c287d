"""Junction splice post-conditions on the depth-3 pipeline."""

import math
from fractions import Fraction

import numpy as np
import pytest

from cantorarc.arcs import ball_center, ball_radius
from cantorarc.errors import TrimFailure
from cantorarc.modify import (
    _adjacent_pairs,
    _segs_intersect_exact,
    compute_theta,
    run_modifications,
    validate_theta,
)


def test_every_adjacency_gets_a_connector(pipeline3, modified3):
    tree, intervals, system = pipeline3
    pairs = _adjacent_pairs(intervals)
    got = {(c.left_key, c.right_key) for c in modified3.connectors}
    assert got == set(pairs)
    assert {c.phase for c in modified3.connectors} == {1, 2}


def test_theta_below_half_kappa(modified3):
    assert modified3.theta > 0.0
    for w, k_w in modified3.kappa.items():
        assert modified3.theta < 0.5 * k_w


def test_connectors_contained_in_double_ball(pipeline3, modified3):
    tree, intervals, system = pipeline3
    for c in modified3.connectors:
        assert c.ball_excursion <= 2.0
        r = ball_radius(tree, c.ball)
        center = ball_center(tree, c.ball)
        for v in c.gamma.vertices:
            assert np.hypot(*(v - center)) <= 2.0 * r + 1e-12


def test_connector_clearance_to_uninvolved_pieces(pipeline3, modified3):
    tree, intervals, system = pipeline3
    for c in modified3.connectors:
        d_w = tree.node(c.right_key[0][:-1]).diam_U
        assert c.clearance_to_H > c.theta * d_w


def test_trim_inequalities(pipeline3, modified3):
    tree, intervals, system = pipeline3
    for c in modified3.connectors:
        lp = system.pieces[c.left_key].curve
        rp = system.pieces[c.right_key].curve
        # b~ < tR < tL < a~, with the trims inside the original domains
        assert lp.t0 < c.b_tilde < lp.t1
        assert rp.t0 < c.a_tilde < rp.t1
        assert c.b_tilde < c.tR < c.tL < c.a_tilde
        # trimmed arclengths stay below the theta budget scale
        assert 0.0 < c.s_star and 0.0 < c.s_tilde
        assert c.theta_d < 0.5 * c.g0
    assert modified3.trim_margin > 0.0


def test_final_trims_leave_nonempty_pieces(pipeline3, modified3):
    tree, intervals, system = pipeline3
    for key, (lo, hi) in modified3.trims.items():
        assert lo < hi
        c = system.pieces[key].curve
        assert c.t0 <= lo and hi <= c.t1


def test_spliced_triples_injective(modified3):
    for c in modified3.connectors:
        assert math.isfinite(c.junction_L)
        assert c.junction_L >= 1.0
        g = c.gamma
        assert len(g.vertices) == 4
        # float vertices may collapse (the trim offsets sit below one ulp of
        # the coordinates); the parameters never do
        assert g.breakpoints == (c.b_tilde, c.tR, c.tL, c.a_tilde)


def test_fault_injection_oversized_theta_rejected(pipeline3, modified3):
    tree, intervals, system = pipeline3
    bad = 2.0 * min(modified3.kappa.values())  # well past every kappa/2
    with pytest.raises(TrimFailure):
        run_modifications(tree, system, intervals, theta_override=bad)


def test_validate_theta_boundary():
    kappa = {("w",): 1.0}
    from cantorarc.modify import ModificationResult

    validate_theta(ModificationResult(), 0.499, kappa)
    with pytest.raises(TrimFailure):
        validate_theta(ModificationResult(), 0.5, kappa)


def test_compute_theta_uniform_in_qs_mode(pipeline3):
    tree, intervals, system = pipeline3
    t_default = compute_theta(tree, system)
    some_key = next(iter(system.pieces))
    assert compute_theta(tree, system, key=some_key) == t_default
    assert t_default > 0.0


def test_exact_segment_predicate():
    F = Fraction
    a, b = (F(0), F(0)), (F(2), F(2))
    c, d = (F(0), F(2)), (F(2), F(0))
    assert _segs_intersect_exact(a, b, c, d)
    e, f = (F(3), F(0)), (F(3), F(2))
    assert not _segs_intersect_exact(a, b, e, f)
    # collinear overlap counts as intersecting
    assert _segs_intersect_exact(a, b, (F(1), F(1)), (F(3), F(3)))
    # collinear but disjoint does not
    assert not _segs_intersect_exact(a, b, (F(3), F(3)), (F(4), F(4)))
    # sub-ulp scale features survive the rational predicates
    tiny = F(1, 10**40)
    assert not _segs_intersect_exact(
        (F(1), tiny), (F(2), tiny), (F(1), 2 * tiny), (F(2), 2 * tiny)
    )
