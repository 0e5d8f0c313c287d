import copy
import math

import numpy as np
import pytest

from cantorarc.defining import (
    build_exhaustion,
    build_tree,
    canonicalize,
    cantor_partition,
    compute_constants,
    select_entries_exits,
    verify_ball_separation,
    verify_nbhd_separation,
)
from cantorarc.io import expand_ifs
from cantorarc.verify import defining_sequence_audit

from conftest import fourcorner_maps


@pytest.fixture(scope="module")
def tree2():
    E = expand_ifs(fourcorner_maps(), depth=2)
    t = build_tree(E, delta=0.1, max_depth=2, grid_cells=128, mode="qs")
    compute_constants(t)
    select_entries_exits(t, seed=0)
    build_exhaustion(t, levels=2)
    return t


def test_audit_passes_on_clean_tree(tree2):
    flags = defining_sequence_audit(tree2)
    assert all(flags.values()), flags


def test_audit_detects_diameter_fault(tree2):
    bad = copy.deepcopy(tree2)
    w = next(w for w in bad.words() if len(w) == 2)
    # inflate a child past half its parent's diameter
    bad.node(w).diam_U = 0.9 * bad.node(w[:-1]).diam_U
    flags = defining_sequence_audit(bad)
    assert not flags["D4"]
    assert not flags["D4q"]


def test_audit_detects_boundary_touching_sample(tree2):
    bad = copy.deepcopy(tree2)
    w = next(w for w in bad.words() if len(w) == 2)
    bad.node(w).dist_boundary_to_E = 0.0
    flags = defining_sequence_audit(bad)
    assert not flags["D5"]
    assert not flags["D5q"]


def test_audit_detects_sibling_overlap(tree2):
    bad = copy.deepcopy(tree2)
    w = next(w for w in bad.words() if bad.node(w).n_children >= 2)
    kids = bad.node(w).children
    m = bad.node(w).child_masks
    m[kids[1]] = m[kids[0]].copy()
    assert not defining_sequence_audit(bad)["D3"]


def test_audit_detects_noncontiguous_children(tree2):
    bad = copy.deepcopy(tree2)
    w = next(w for w in bad.words() if bad.node(w).n_children >= 2)
    bad.node(w).children = bad.node(w).children[1:]
    assert not defining_sequence_audit(bad)["D1"]


def test_audit_detects_split_collar(tree2):
    bad = copy.deepcopy(tree2)
    w = next(w for w in bad.words() if bad.node(w).uhat_mask is not None)
    m = bad.node(w).uhat_mask
    ys, xs = np.nonzero(m)
    m2 = np.zeros_like(m)
    m2[ys[0], xs[0]] = True
    far = np.argmax((ys - ys[0]) ** 2 + (xs - xs[0]) ** 2)
    m2[ys[far], xs[far]] = True
    bad.node(w).uhat_mask = m2
    assert not defining_sequence_audit(bad)["D6"]


def test_xi_measured_sane(tree2):
    assert 1.0 < tree2.xi_measured < 100.0
    assert math.isfinite(tree2.xi_exhaustion)


def test_exhaustion_nests_outward(tree2):
    assert [lvl.index for lvl in tree2.exhaustion] == [-1, -2]
    inner = tree2.node(tree2.ROOT).region
    for lvl in tree2.exhaustion:
        # every inner cell center lies in the next level out
        assert lvl.region.contains(inner.cell_centers()).all()
        assert lvl.dist_inner_to_boundary > 0
        assert lvl.anchor_clearance > 0
        assert lvl.diam_U > inner.diam
        inner = lvl.region


def test_cantor_partition_respects_diameter_bound():
    rng = np.random.default_rng(0)
    from cantorarc.geometry import PointSet, diameter

    clusters = [rng.normal(c, 0.02, size=(12, 2)) for c in ((0, 0), (3, 0), (0, 3))]
    E = PointSet(np.vstack(clusters))
    parts = cantor_partition(E, delta=0.2)
    assert sum(len(p) for p in parts) == len(E)
    for p in parts:
        assert diameter(p.coords) <= 0.2 * E.diam + 1e-12
    # parts come back in left-to-right reading order
    lefts = [p.coords[:, 0].min() for p in parts]
    assert lefts == sorted(lefts)


def test_canonicalize_frame():
    from cantorarc.geometry import PointSet, diameter

    rng = np.random.default_rng(4)
    E = PointSet(rng.uniform(-5, 7, size=(20, 2)))
    canon, o, (s, tx, ty) = canonicalize(E)
    assert (o.x, o.y) == (0.0, 0.0)
    # anchor point maps to the origin and the diameter is normalized
    assert np.isclose(diameter(canon.coords) / diameter(E.coords), s)
    back = (canon.coords - [tx, ty]) / s
    assert np.allclose(back, E.coords)


def test_entry_exit_balls_selected(tree2):
    for w in tree2.words():
        if w == tree2.ROOT:
            continue  # the outermost domain has no enclosing gap to bridge
        node = tree2.node(w)
        assert node.X_w is not None and node.Y_w is not None
        assert node.X_w.radius > 0 and node.Y_w.radius > 0
    verify_ball_separation(tree2)
    verify_nbhd_separation(tree2)


def test_member_partition_by_depth(tree2):
    # children partition the parent's members exactly
    for w in tree2.words():
        node = tree2.node(w)
        if not node.children:
            continue
        union = np.concatenate([tree2.node(c).members for c in node.children])
        assert sorted(union) == sorted(node.members)
