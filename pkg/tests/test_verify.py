import math
from fractions import Fraction

import numpy as np
import pytest

from cantorarc.curves import reparam_to_interval
from cantorarc.errors import WindowIsLimitBlock
from cantorarc.verify import (
    annulus_modulus,
    arclength_samples,
    box_dimension,
    dimension_scales,
    local_bilip,
    uniform_curve,
    uniformity_batch,
    weak_qs_constant,
)

F = Fraction


@pytest.mark.parametrize("ratio", [math.e, math.e**2])
def test_annulus_modulus_against_closed_form(ratio):
    got = annulus_modulus(1.0, ratio, grid=256)
    want = 2.0 * math.pi / math.log(ratio)
    assert abs(got - want) / want < 0.05


def test_annulus_modulus_scale_invariant():
    a = annulus_modulus(1.0, math.e, grid=128)
    b = annulus_modulus(3.0, 3.0 * math.e, grid=128)
    assert a == pytest.approx(b, rel=1e-9)


def test_box_dimension_similarity_invariant():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, size=(50000, 2))
    scales = dimension_scales(pts)
    d0 = box_dimension(pts, scales)
    moved = 7.0 * pts + np.array([100.0, -40.0])
    d1 = box_dimension(moved, [7.0 * s for s in scales])
    assert d1 == pytest.approx(d0, abs=0.02)
    # finite-sample LS slope of a filled square reads slightly under 2
    assert d0 == pytest.approx(2.0, abs=0.15)


def test_dimension_scales_ladder():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, size=(5000, 2))
    scales = dimension_scales(pts)
    assert len(scales) >= 4
    for a, b in zip(scales, scales[1:]):
        assert b == pytest.approx(a / 2.0)
    assert scales[0] == pytest.approx(1.0, rel=0.05)


def test_box_dimension_needs_enough_scales():
    with pytest.raises(AssertionError):
        box_dimension(np.zeros((10, 2)), [1.0, 0.5, 0.25])


def test_arclength_samples_even_spacing():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])
    c = reparam_to_interval(verts, F(0), F(1))
    pts = arclength_samples(c, 301)
    gaps = np.hypot(*np.diff(pts, axis=0).T)
    assert np.allclose(gaps, gaps[0], rtol=1e-9)
    assert np.allclose(pts[0], verts[0]) and np.allclose(pts[-1], verts[-1])


def test_weak_qs_constant_straight_segment(phi3):
    seg = reparam_to_interval(np.array([[0.0, 0.0], [1.0, 0.0]]), F(0), F(1))

    class Fake:
        curve = seg
        t0, t1 = F(0), F(1)

    H = weak_qs_constant(Fake(), triples=5000, seed=1)
    assert H <= 1.0 + 1e-12
    # deterministic under a fixed seed, finite on the real curve
    assert weak_qs_constant(phi3, triples=500, seed=2) == weak_qs_constant(
        phi3, triples=500, seed=2
    )
    assert math.isfinite(weak_qs_constant(phi3, triples=500, seed=2))


def test_local_bilip_windows(pipeline3, modified3, phi3):
    tree, intervals, system = pipeline3
    L = local_bilip(phi3, intervals, modified3, intervals.order[1])
    assert math.isfinite(L) and L >= 1.0
    with pytest.raises(WindowIsLimitBlock):
        local_bilip(phi3, intervals, modified3, ((9, 9, 9), 0))


def _free_point_near(tree, target, rng, margin):
    E = tree.E.coords
    root = tree.node(tree.ROOT).region
    for _ in range(10000):
        p = target + rng.normal(0, margin * 4, 2)
        if not root.contains(p[None, :])[0]:
            continue
        if np.hypot(E[:, 0] - p[0], E[:, 1] - p[1]).min() > margin:
            return p
    raise RuntimeError("no free point found")


def test_uniform_curve_case_dispatch(pipeline3):
    tree, intervals, system = pipeline3
    rng = np.random.default_rng(0)
    margin = tree.node(tree.ROOT).region.cell

    # case 1: endpoints much closer together than their common level
    x = _free_point_near(tree, np.array([0.0, 0.0]), rng, margin)
    y = x + np.array([1e-9, 0.0])
    curve, ratio, cigar, case = uniform_curve(x, y, tree)
    assert case == 1
    assert ratio == pytest.approx(1.0)

    # case 2: both points live at the root level, far apart
    deep = {w for w in tree.words() if len(w) >= 1}
    root_reg = tree.node(tree.ROOT).region
    x0, y0, x1, y1 = root_reg.bbox()

    def at_level(p):
        from cantorarc.verify import _level_chain

        return _level_chain(tree, p)

    def draw_case(want_len_x, want_len_y, distinct_subtrees=False):
        E = tree.E.coords
        for _ in range(60000):
            x = rng.uniform((x0, y0), (x1, y1))
            y = rng.uniform((x0, y0), (x1, y1))
            if min(np.hypot(*(E - x).T).min(), np.hypot(*(E - y).T).min()) <= margin:
                continue
            try:
                cx, cy = at_level(x), at_level(y)
            except Exception:
                continue
            wx = [e for e in cx if isinstance(e, tuple)]
            wy = [e for e in cy if isinstance(e, tuple)]
            if len(wx) != want_len_x or len(wy) != want_len_y:
                continue
            if distinct_subtrees and (len(wx) < 2 or len(wy) < 2 or wx[1] == wy[1]):
                continue
            if np.hypot(*(x - y)) > 0.05:
                return x, y
        raise RuntimeError("pair not found")

    x, y = draw_case(1, 1)  # both stop at the root word
    _, ratio, cigar, case = uniform_curve(x, y, tree)
    assert case == 2 and math.isfinite(cigar)

    x, y = draw_case(1, 2)  # one endpoint a level deeper
    _, ratio, cigar, case = uniform_curve(x, y, tree)
    assert case == 3 and math.isfinite(cigar)

    # case 4: points inside two different cells one level below the wrapper
    def draw_in_cell(w):
        E = tree.E.coords
        node = tree.node(w)
        center = E[node.members].mean(axis=0)
        for _ in range(20000):
            p = center + rng.normal(0, node.diam_U / 2, 2)
            if np.hypot(*(E - p).T).min() <= margin:
                continue
            try:
                words = [e for e in at_level(p) if isinstance(e, tuple)]
            except Exception:
                continue
            if len(words) >= 3 and words[2] == w:
                return p
        raise RuntimeError(f"no free point inside {w}")

    kids = tree.children(tree.WRAPPER)
    x = draw_in_cell(kids[0])
    y = draw_in_cell(kids[-1])
    _, ratio, cigar, case = uniform_curve(x, y, tree)
    assert case == 4 and math.isfinite(cigar)


def test_uniformity_batch_rows(pipeline3):
    tree, intervals, system = pipeline3
    c, lr, rows = uniformity_batch(tree, pairs=8, seed=3)
    assert math.isfinite(c) and math.isfinite(lr)
    assert len(rows) == 8
    for x, y, ratio, cigar, case in rows:
        assert ratio >= 1.0 - 1e-12
        assert cigar > 0
        assert case in (1, 2, 3, 4)
