import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cantorarc.curves import (
    ParamCurve,
    concat_curves,
    measure_quasisimilarity,
    polyline_length,
    polyline_min_dist,
    polyline_self_intersects,
    reparam_to_interval,
    seg_point_dist,
)
from cantorarc.errors import DegenerateCurve

F = Fraction


def zigzag():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [2.0, 1.0]])
    return ParamCurve((F(0), F(1, 3), F(2, 3), F(1)), verts)


def test_evaluate_and_point_at_agree():
    c = zigzag()
    for t in (F(0), F(1, 6), F(1, 2), F(5, 6), F(1)):
        assert np.allclose(c.point_at(t), c.evaluate(float(t))[0], atol=1e-12)
    assert np.allclose(c.point_at(F(1, 2)), [1.0, 0.5])


def test_length_and_diam():
    c = zigzag()
    assert c.length == pytest.approx(3.0)
    assert c.diam == pytest.approx(math.hypot(2.0, 1.0))


def test_subcurve_exact_cuts():
    c = zigzag()
    s = c.subcurve(F(1, 6), F(5, 6))
    assert s.t0 == F(1, 6) and s.t1 == F(5, 6)
    assert np.allclose(s.vertices[0], [0.5, 0.0])
    assert np.allclose(s.vertices[-1], [1.5, 1.0])
    # interior breakpoints survive unchanged
    assert F(1, 3) in s.breakpoints and F(2, 3) in s.breakpoints
    assert s.length == pytest.approx(2.0)


def test_subcurve_then_concat_recovers_curve():
    c = zigzag()
    left = c.subcurve(F(0), F(1, 2))
    right = c.subcurve(F(1, 2), F(1))
    glued = concat_curves([left, right])
    ts = np.linspace(0, 1, 37)
    assert np.allclose(glued.evaluate(ts), c.evaluate(ts), atol=1e-12)


def test_concat_requires_chained_domains():
    c = zigzag()
    with pytest.raises(AssertionError):
        concat_curves([c.subcurve(F(0), F(1, 3)), c.subcurve(F(1, 2), F(1))])


def test_dedupe_collapses_repeats():
    verts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    c = ParamCurve((F(0), F(1, 4), F(1, 2), F(3, 4), F(1)), verts)
    d = c.dedupe()
    assert len(d.vertices) == 3
    assert d.t0 == F(0) and d.t1 == F(1)
    with pytest.raises(DegenerateCurve):
        ParamCurve((F(0), F(1)), np.zeros((2, 2))).dedupe()


def test_reparam_constant_speed():
    verts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 1.0]])
    c = reparam_to_interval(verts, F(2, 7), F(5, 7))
    assert c.t0 == F(2, 7) and c.t1 == F(5, 7)
    # breakpoint splits the domain proportionally to arclength, exactly
    assert c.breakpoints[1] - c.t0 == (c.t1 - c.t0) * F(3) / F(4)
    # constant speed: equal parameter steps move equal distances
    ts = np.linspace(2 / 7, 5 / 7, 9)
    pts = c.evaluate(ts)
    steps = np.hypot(*np.diff(pts, axis=0).T)
    assert np.allclose(steps, steps[0], rtol=1e-9)


def test_reparam_rejects_degenerate():
    with pytest.raises(DegenerateCurve):
        reparam_to_interval(np.zeros((3, 2)), F(0), F(1))


def test_measure_quasisimilarity_straight_line():
    c = reparam_to_interval(np.array([[0.0, 0.0], [2.0, 0.0]]), F(0), F(1))
    L, lam = measure_quasisimilarity(c)
    assert L == pytest.approx(1.0)
    assert lam == pytest.approx(2.0)


def test_measure_quasisimilarity_detour_increases_spread():
    straight = reparam_to_interval(np.array([[0.0, 0.0], [1.0, 0.0]]), F(0), F(1))
    detour = reparam_to_interval(
        np.array([[0.0, 0.0], [0.5, 0.4], [1.0, 0.0]]), F(0), F(1)
    )
    L0, _ = measure_quasisimilarity(straight)
    L1, _ = measure_quasisimilarity(detour)
    assert L1 > L0


def test_polyline_min_dist_cases():
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    Q = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert polyline_min_dist(P, Q) == pytest.approx(1.0)
    # crossing segments have distance zero
    X = np.array([[0.5, -1.0], [0.5, 2.0]])
    assert polyline_min_dist(P, X) == 0.0
    # point vs polyline
    assert polyline_min_dist(np.array([[0.5, 0.25]]), P) == pytest.approx(0.25)
    assert polyline_min_dist(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == 5.0


@settings(max_examples=80, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False)
        ),
        min_size=2,
        max_size=6,
    ),
    st.lists(
        st.tuples(
            st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False)
        ),
        min_size=2,
        max_size=6,
    ),
)
def test_polyline_min_dist_matches_brute_force(pv, qv):
    P, Q = np.asarray(pv), np.asarray(qv)
    got = polyline_min_dist(P, Q)
    from cantorarc.curves import _seg_seg_dist

    want = min(
        _seg_seg_dist(P[i], P[i + 1], Q[j], Q[j + 1])
        for i in range(len(P) - 1)
        for j in range(len(Q) - 1)
    )
    assert got == pytest.approx(want, abs=1e-9)


def test_self_intersection_detection():
    bow = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert polyline_self_intersects(bow)
    arc = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert not polyline_self_intersects(arc)
    # closed curve: first/last sharing the junction point is fine
    square = np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]
    )
    assert not polyline_self_intersects(square)


def test_seg_point_dist_degenerate_segment():
    p = np.array([3.0, 4.0])
    a = np.array([0.0, 0.0])
    assert seg_point_dist(p, a, a) == 5.0


def test_polyline_length():
    assert polyline_length(np.array([[0.0, 0.0]])) == 0.0
    assert polyline_length(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
