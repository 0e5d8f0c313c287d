"""Global curve assembly: trimmed pieces, connectors, and limit-block tours.

The assembled curve covers the whole parameter range of the interval system
in order: each gap interval's middle third carries its (possibly trimmed)
routed piece, adjacent junctions carry the spliced connector, and each
residual block carries a tour routed inside the block's region that passes
within one grid cell of every sample point living there.  Residual blocks
stand in for the limit set at the truncation depth, so each one is recorded
as a mark on the parameter line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from cantorarc.arcs import (
    ArcSystem,
    cell_to_world,
    rasterize_curves,
    world_to_cell,
)
from cantorarc.curves import ParamCurve, concat_curves, reparam_to_interval
from cantorarc.defining import DefiningTree
from cantorarc.errors import AddressMismatch, NoPath
from cantorarc.intervals import IKey, IntervalTree, Word
from cantorarc.modify import Connector, ModificationResult
from cantorarc.pathfind import (
    astar,
    dilate_blocked,
    hug_penalty,
    nearest_free_cell,
    shortcut,
)

# junction endpoint agreement tolerance before snapping, in world units:
# splice geometry lives below one double ulp of the coordinates, so the
# pieces' float endpoints may differ by rounding noise only
SNAP_TOL = 1e-9

PROVENANCE_TAGS = ("h", "Gamma", "geodesic", "limit-block")


@dataclass
class PhiCurve:
    curve: ParamCurve
    # (block word, parameter interval, representative sample point)
    limit_marks: List[Tuple[Word, Tuple[Fraction, Fraction], np.ndarray]]
    # (lo, hi, tag) per segment group, in parameter order
    provenance: List[Tuple[Fraction, Fraction, str]]

    @property
    def t0(self) -> Fraction:
        return self.curve.t0

    @property
    def t1(self) -> Fraction:
        return self.curve.t1


def _member_points(tree: DefiningTree, w: Word) -> np.ndarray:
    return tree.E.coords[tree.node(w).members]


def check_block_bijection(tree: DefiningTree, intervals: IntervalTree):
    """Residual blocks must correspond one-to-one to unsubdivided tree
    nodes; anything else means the two recursions diverged."""
    blocks = set(intervals.blocks)
    leaves = {w for w in tree.words() if not tree.node(w).children}
    if blocks != leaves:
        missing = sorted(leaves - blocks)
        extra = sorted(blocks - leaves)
        raise AddressMismatch(
            f"block/word bijection broken: unmatched nodes {missing[:4]}, "
            f"unmatched blocks {extra[:4]}"
        )
    for w in blocks:
        if len(tree.node(w).members) == 0:
            raise AddressMismatch(f"residual block {w} holds no sample points")


def _greedy_tour(start: np.ndarray, targets: np.ndarray) -> List[int]:
    """Nearest-neighbor visiting order of target points from a start point."""
    left = list(range(len(targets)))
    cur = start
    order = []
    while left:
        k = min(left, key=lambda i: float(np.hypot(*(targets[i] - cur))))
        order.append(k)
        left.remove(k)
        cur = targets[k]
    return order


def build_block_curve(
    tree: DefiningTree,
    system: ArcSystem,
    w: Word,
    entry: np.ndarray,
    exit_: np.ndarray,
    lo: Fraction,
    hi: Fraction,
) -> ParamCurve:
    """Tour inside U_w from the incoming piece endpoint to the outgoing one,
    passing through the grid cell of every member sample point."""
    node = tree.node(w)
    grid = node.region
    members = _member_points(tree, w)
    order = _greedy_tour(entry, members)
    stops = [entry] + [members[k] for k in order] + [exit_]

    prior = [system.pieces[k].vertices for k in system.build_order]
    blocked = rasterize_curves(grid, prior)
    # widening ladder as in the arc router: prefer clearance off earlier
    # arcs' rim collars, fall back to the bare region
    for clear in (1.5, 0.0, None):
        if clear is None:
            free = grid.occupancy.copy()
        else:
            free = grid.occupancy & ~dilate_blocked(blocked, clear)
        cells = [nearest_free_cell(free, world_to_cell(grid, p), max_radius=6) for p in stops]
        if any(c is None for c in cells):
            continue
        try:
            pen = hug_penalty(free)
            path: List[tuple] = []
            for c0, c1 in zip(cells[:-1], cells[1:]):
                leg = shortcut(astar(free, c0, c1, penalty=pen), free)
                path.extend(leg if not path else leg[1:])
            verts = [stops[0]] + [cell_to_world(grid, c) for c in path] + [stops[-1]]
            return reparam_to_interval(np.asarray(verts), lo, hi)
        except NoPath:
            continue
    raise NoPath(f"residual block {w} tour failed", context=w)


def _prov_extend(prov, lo: Fraction, hi: Fraction, tag: str):
    assert tag in PROVENANCE_TAGS
    assert lo < hi
    if prov:
        assert prov[-1][1] == lo
    prov.append((lo, hi, tag))


def _snap(prev_curve: ParamCurve, nxt: ParamCurve) -> ParamCurve:
    """Force exact endpoint agreement at a junction.

    The analytic endpoints agree to below one float ulp (trim offsets are
    orders of magnitude under the coordinate pitch); rounding noise beyond
    SNAP_TOL means a construction bug."""
    a = prev_curve.vertices[-1]
    b = nxt.vertices[0]
    gap = float(np.hypot(*(a - b)))
    if gap > SNAP_TOL:
        raise AddressMismatch(f"discontinuity {gap:g} at t = {nxt.t0}")
    if gap == 0.0:
        return nxt
    verts = nxt.vertices.copy()
    verts[0] = a
    return ParamCurve(nxt.breakpoints, verts)


def assemble_phi(
    tree: DefiningTree,
    intervals: IntervalTree,
    system: ArcSystem,
    mods: ModificationResult,
) -> PhiCurve:
    """Splice everything into one curve over the full parameter range.

    Walks the in-order sequence of gaps and blocks; gaps contribute their
    trimmed pieces ("h"), adjacent junctions the spliced connector (outer
    splice segments "geodesic", middle bridge stretch "Gamma"), blocks a
    routed tour ("limit-block").
    """
    check_block_bijection(tree, intervals)
    by_left: Dict[IKey, Connector] = {c.left_key: c for c in mods.connectors}

    gap_keys = [key for kind, key in intervals.sequence if kind == "I"]
    segments: List[ParamCurve] = []
    prov: List[Tuple[Fraction, Fraction, str]] = []
    limit_marks = []

    seq = intervals.sequence
    for pos, (kind, item) in enumerate(seq):
        if kind == "J":
            continue
        key = item
        lo_eff, hi_eff = mods.trims[key]
        piece = system.pieces[key].curve.subcurve(lo_eff, hi_eff)
        if segments:
            piece = _snap(segments[-1], piece)
        segments.append(piece)
        _prov_extend(prov, lo_eff, hi_eff, "h")

        nxt = seq[pos + 1] if pos + 1 < len(seq) else None
        if nxt is None:
            break
        if nxt[0] == "J":
            w = nxt[1]
            nkey = gap_keys[gap_keys.index(key) + 1]
            n_lo = mods.trims[nkey][0]
            block = build_block_curve(
                tree,
                system,
                w,
                entry=piece.vertices[-1],
                exit_=system.pieces[nkey].vertices[0],
                lo=hi_eff,
                hi=n_lo,
            )
            segments.append(_snap(segments[-1], block))
            _prov_extend(prov, hi_eff, n_lo, "limit-block")
            rep = _member_points(tree, w)[0]
            limit_marks.append((w, (hi_eff, n_lo), rep))
        else:
            conn = by_left.get(key)
            if conn is None:
                raise AddressMismatch(
                    f"gap {key} touches its successor but has no connector"
                )
            segments.append(_snap(segments[-1], conn.gamma))
            _prov_extend(prov, conn.b_tilde, conn.tR, "geodesic")
            _prov_extend(prov, conn.tR, conn.tL, "Gamma")
            _prov_extend(prov, conn.tL, conn.a_tilde, "geodesic")

    curve = concat_curves(segments)
    # monotone provenance: group order equals the interval order list
    h_order = [p for p in prov if p[2] == "h"]
    assert [ (p[0], p[1]) for p in h_order ] == [
        (mods.trims[k][0], mods.trims[k][1]) for k in intervals.order
    ]
    return PhiCurve(curve=curve, limit_marks=limit_marks, provenance=prov)


def containment_gap(tree: DefiningTree, phi: PhiCurve) -> float:
    """Max over sample points of the distance to the assembled curve."""
    from cantorarc.curves import seg_point_dist

    verts = phi.curve.vertices
    worst = 0.0
    for p in tree.E.coords:
        d = np.hypot(verts[:, 0] - p[0], verts[:, 1] - p[1])
        k = int(np.argmin(d))
        best = float(d[k])
        for i in (k - 1, k):
            if 0 <= i < len(verts) - 1:
                best = min(best, seg_point_dist(p, verts[i], verts[i + 1]))
        worst = max(worst, best)
    return worst


def injectivity_gap(phi: PhiCurve, samples: int = 2000, seed: int = 0) -> float:
    """Min distance between curve samples whose parameters differ by more
    than one residual block length (sampled injectivity check)."""
    rng = np.random.default_rng(seed)
    t0f, t1f = float(phi.t0), float(phi.t1)
    ts = np.sort(rng.uniform(t0f, t1f, size=samples))
    pts = phi.curve.evaluate(ts)
    if phi.limit_marks:
        min_gap = min(float(hi - lo) for _, (lo, hi), _ in phi.limit_marks)
    else:
        min_gap = (t1f - t0f) / samples
    best = math.inf
    for i in range(len(ts)):
        dt = ts - ts[i]
        sel = dt > min_gap
        if not sel.any():
            continue
        d = np.hypot(pts[sel, 0] - pts[i, 0], pts[sel, 1] - pts[i, 1])
        best = min(best, float(d.min()))
    return best


def phi_to_json(phi: PhiCurve) -> dict:
    def fr(x: Fraction):
        return [x.numerator, x.denominator]

    def wkey(w):
        return ".".join(map(str, w)) if w else "eps"

    c = phi.curve
    return {
        "breakpoints": [fr(t) for t in c.breakpoints],
        "vertices": c.vertices.tolist(),
        "provenance": [[fr(lo), fr(hi), tag] for lo, hi, tag in phi.provenance],
        "limit_marks": [
            {"word": wkey(w), "interval": [fr(lo), fr(hi)], "point": p.tolist()}
            for w, (lo, hi), p in phi.limit_marks
        ],
    }
