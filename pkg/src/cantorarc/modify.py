"""Local modification of adjacent arc pieces: connectors, trimming, splicing.

Adjacent gap pieces end and start inside a shared entry/exit ball, at
distinct anchor points.  Each adjacency gets a connector: a straight bridge
between the anchors, with both pieces trimmed back to the distance level
theta*d and rejoined by two short straight splice segments.  Work happens in
two alternating-color phases so neighbors of an interval are never modified
in the same phase.

All splice geometry lives at the scale theta*d, far below the absolute float
pitch of the coordinates, so every trim quantity is computed in a
junction-relative frame (offsets from the shared ball's anchors) and every
trim parameter is kept as an exact Fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from cantorarc.arcs import (
    ArcPiece,
    ArcSystem,
    BallKey,
    ball_center,
    ball_radius,
    piece_pair_distance,
)
from cantorarc.curves import ParamCurve, polyline_min_dist
from cantorarc.defining import DefiningTree
from cantorarc.errors import TrimFailure
from cantorarc.intervals import IKey, IntervalTree, Word, two_coloring

# bisection depth for the level-crossing search: halving a grid-pitch
# bracket 140 times resolves crossings below any positive double
LEVEL_BISECT_ITERS = 140


@dataclass
class Connector:
    """One spliced junction between two adjacent gap pieces."""

    left_key: IKey
    right_key: IKey
    ball: BallKey
    theta: float
    theta_d: float  # theta * diam of the right piece's owner region
    Gamma: ParamCurve  # raw anchor-to-anchor bridge on [b_hat, a_hat]
    b_tilde: Fraction
    tR: Fraction
    tL: Fraction
    a_tilde: Fraction
    gamma: ParamCurve  # spliced curve on [b_tilde, a_tilde]
    # junction-relative audit quantities (frame: left anchor at origin)
    s_star: float  # arclength trimmed off the left piece
    s_tilde: float  # arclength trimmed off the right piece
    g0: float  # anchor gap |Gamma|
    clearance_to_H: float  # min distance to every uninvolved piece
    ball_excursion: float  # max |gamma vertex - ball center| / ball radius
    junction_L: float  # quasisimilarity spread of the spliced triple
    phase: int = 1


@dataclass
class ModificationResult:
    connectors: List[Connector] = field(default_factory=list)
    theta: float = math.nan
    theta_phase2: float = math.nan
    beta_star_refreshed: float = math.nan
    kappa: Dict[Word, float] = field(default_factory=dict)
    kappa_comparison: Dict[Word, float] = field(default_factory=dict)
    # effective (left, right) parameter bounds of each piece after trimming
    trims: Dict[IKey, List[Fraction]] = field(default_factory=dict)
    trim_margin: float = math.inf  # min over eq:bt / eq:at analogues


def compute_kappa(tree: DefiningTree, system: ArcSystem, w: Word) -> Tuple[float, float]:
    """Separation constant of the arc h_w.

    kappa_w = (diam U_w)^-1 * min of (a) the distance from h_w's image to
    every other word's image and (b) the smallest endpoint span among h_w's
    pieces.  Returns (measured value, comparison value 1/(3 L_w (2N+1))).
    """
    keys = system.by_owner[w]
    diam = tree.node(w).diam_U
    d1 = math.inf
    for v, vkeys in system.by_owner.items():
        if v == w:
            continue
        for ka in keys:
            for kb in vkeys:
                d = piece_pair_distance(
                    system.pieces[ka],
                    system.pieces[kb],
                    cutoff=d1 if math.isfinite(d1) else diam,
                )
                d1 = min(d1, d)
    d2 = min(
        float(np.hypot(*(system.pieces[k].vertices[0] - system.pieces[k].vertices[-1])))
        for k in keys
    )
    kappa = min(d1, d2) / diam
    N = max(tree.n_children_map().values())
    comparison = 1.0 / (3.0 * system.L_by_word[w] * (2 * N + 1))
    return kappa, comparison


def compute_theta(
    tree: DefiningTree,
    system: ArcSystem,
    key: Optional[IKey] = None,
    beta_star: Optional[float] = None,
) -> float:
    """theta = (2L)^-1 * beta* * eps_w * eps_wi * eps_wij * rho_wi.

    In qs mode all eps agree and rho is replaced by the tree minimum, so the
    value is independent of the key; otherwise the key's own constants are
    used (eps_wij taken as the minimum over the children flanking gap j).
    """
    L = max(system.L_by_word.values())
    beta = system.beta_star if beta_star is None else beta_star
    if tree.mode == "qs" or key is None:
        eps = min(
            tree.node(v).eps_w
            for v in tree.words()
            if not math.isnan(tree.node(v).eps_w)
        )
        rho = min(
            tree.node(v).rho_parent
            for v in tree.words()
            if not math.isnan(tree.node(v).rho_parent)
        )
        return beta * eps**3 * rho / (2.0 * L)
    wi, j = key
    w = wi[:-1]
    node = tree.node(wi)
    flank = [i for i in (j, j + 1) if 1 <= i <= node.n_children]
    eps_wij = min(tree.node(wi + (i,)).eps_w for i in flank)
    rho_wi = tree.node(wi + (flank[0],)).rho_parent
    return (
        beta
        * tree.node(w).eps_w
        * node.eps_w
        * eps_wij
        * rho_wi
        / (2.0 * L)
    )


def _terminal_frame(piece: ArcPiece, end: str):
    """(anchor, unit direction leaving the anchor along the curve, segment
    length, inner breakpoint) of a piece's terminal segment."""
    c = piece.curve
    if end == "tail":
        a, prev = c.vertices[-1], c.vertices[-2]
        t_a, t_prev = c.breakpoints[-1], c.breakpoints[-2]
    else:
        a, prev = c.vertices[0], c.vertices[1]
        t_a, t_prev = c.breakpoints[0], c.breakpoints[1]
    d = prev - a
    length = float(np.hypot(*d))
    if length == 0.0:
        raise TrimFailure(f"degenerate terminal segment of piece {piece.key}")
    return a, d / length, length, t_a, t_prev


def _dist_to_segment_rel(p: np.ndarray, e: np.ndarray) -> float:
    """Distance from p to the segment [0, e], all in one relative frame."""
    denom = float(e @ e)
    t = min(1.0, max(0.0, float(p @ e) / denom)) if denom > 0 else 0.0
    return float(np.hypot(*(p - t * e)))


def _level_crossing(direction: np.ndarray, e: np.ndarray, seg_len: float, level: float) -> float:
    """Arclength s in (0, seg_len] where dist(s*direction, [0,e]) first
    reaches `level`, by bracketed bisection.

    The distance is 0 at s = 0 and convex in s, so the crossing is unique
    once the far end clears the level."""
    f = lambda s: _dist_to_segment_rel(s * direction, e) - level
    if f(seg_len) <= 0.0:
        raise TrimFailure("distance level never crossed on terminal segment")
    lo, hi = 0.0, seg_len
    for _ in range(LEVEL_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _fr_pt(p) -> Tuple[Fraction, Fraction]:
    return (Fraction(float(p[0])), Fraction(float(p[1])))


def _jpt(base, off) -> Tuple[Fraction, Fraction]:
    """base + off as exact rationals; off sits far below one ulp of base."""
    return (
        Fraction(float(base[0])) + Fraction(float(off[0])),
        Fraction(float(base[1])) + Fraction(float(off[1])),
    )


def _orient(a, b, c) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _between(a, b, c) -> bool:
    return (
        min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    )


def _segs_intersect_exact(p1, p2, p3, p4) -> bool:
    """Exact closed-segment intersection over rational coordinates."""
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and (
        (d3 > 0) != (d4 > 0)
    ) and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _between(p3, p4, p1):
        return True
    if d2 == 0 and _between(p3, p4, p2):
        return True
    if d3 == 0 and _between(p1, p2, p3):
        return True
    if d4 == 0 and _between(p1, p2, p4):
        return True
    return False


def build_connector(
    tree: DefiningTree,
    system: ArcSystem,
    left_key: IKey,
    right_key: IKey,
    theta: float,
    intervals: IntervalTree,
    trims: Dict[IKey, List[Fraction]],
    phase: int,
) -> Connector:
    """Bridge, trim, and splice one adjacency sharing a ball."""
    lp = system.pieces[left_key]
    rp = system.pieces[right_key]
    if lp.goal_ball != rp.start_ball:
        raise TrimFailure(
            f"adjacent pieces {left_key}/{right_key} do not share a ball"
        )
    ball = lp.goal_ball
    d_w = tree.node(right_key[0][:-1]).diam_U
    theta_d = theta * d_w

    # junction frame: left anchor at the origin
    aL, v_in, len_L, b_hat, t_prevL = _terminal_frame(lp, "tail")
    aR, v_out, len_R, a_hat, t_nextR = _terminal_frame(rp, "head")
    e = aR - aL
    g0 = float(np.hypot(*e))
    if g0 == 0.0:
        raise TrimFailure(f"coincident anchors in ball {ball}")
    if theta_d >= 0.5 * g0:
        raise TrimFailure(
            f"theta*d = {theta_d:g} not small against anchor gap {g0:g}"
        )
    u_hat = e / g0

    # b~: earliest parameter of the left piece within theta*d of Gamma.
    # Everything before the terminal segment must stay clear of the level.
    pre = polyline_min_dist(lp.vertices[:-1], np.vstack([aL, aR]))
    if pre <= theta_d:
        raise TrimFailure(f"left piece {left_key} re-enters the trim level")
    s_star = _level_crossing(v_in, e, len_L, theta_d)
    b_tilde = b_hat - (b_hat - t_prevL) * Fraction(s_star) / Fraction(len_L)

    # a~: latest parameter of the right piece within theta*d of Gamma
    pre = polyline_min_dist(rp.vertices[1:], np.vstack([aL, aR]))
    if pre <= theta_d:
        raise TrimFailure(f"right piece {right_key} re-enters the trim level")
    s_tilde = _level_crossing(v_out, -e, len_R, theta_d)
    a_tilde = a_hat + (t_nextR - a_hat) * Fraction(s_tilde) / Fraction(len_R)

    # t^R: last Gamma parameter at distance theta*d from h(b~)
    p_rel = s_star * v_in  # trimmed left endpoint, aL frame
    pu = float(p_rel @ u_hat)
    pp2 = max(float(p_rel @ p_rel) - pu * pu, 0.0)
    tau_R = max(pu + math.sqrt(max(theta_d**2 - pp2, 0.0)), 0.0)
    # t^L: first Gamma parameter at distance theta*d from h(a~).  Kept as
    # sigma_L, the distance back from the aR end: tau_L = g0 - sigma_L would
    # collapse to g0 outright in doubles (sigma_L sits below one ulp of g0).
    q_rel = s_tilde * v_out  # trimmed right endpoint, aR frame
    qu = float(q_rel @ u_hat)
    qp2 = max(float(q_rel @ q_rel) - qu * qu, 0.0)
    sigma_L = max(-qu + math.sqrt(max(theta_d**2 - qp2, 0.0)), 0.0)
    if not tau_R + sigma_L < g0:
        raise TrimFailure("trim tangency points out of order on Gamma")

    span = a_hat - b_hat
    tR = b_hat + span * Fraction(tau_R) / Fraction(g0)
    tL = a_hat - span * Fraction(sigma_L) / Fraction(g0)
    if not (b_tilde < tR < tL < a_tilde):
        raise TrimFailure(
            f"trim parameter ordering violated at {left_key}/{right_key}"
        )

    Gamma = ParamCurve((b_hat, a_hat), np.vstack([aL, aR]))
    gamma = ParamCurve(
        (b_tilde, tR, tL, a_tilde),
        np.vstack([aL + p_rel, aL + tau_R * u_hat, aR - sigma_L * u_hat, aR + q_rel]),
    )

    # phase-2 search ranges are restricted by phase-1 trims (eq:ba analogue)
    cur_lo, cur_hi = trims[left_key]
    if not b_tilde > cur_lo:
        raise TrimFailure(f"left piece {left_key} trimmed to emptiness")
    cur_lo, cur_hi = trims[right_key]
    if not a_tilde < cur_hi:
        raise TrimFailure(f"right piece {right_key} trimmed to emptiness")

    # containment in 2B (junction-relative; anchors sit within r/2 of center)
    c = ball_center(tree, ball)
    r = ball_radius(tree, ball)
    exc = max(
        float(np.hypot(*(v - c))) for v in (aL + p_rel, aL, aR, aR + q_rel)
    ) + max(tau_R, sigma_L)
    ball_excursion = exc / r
    if ball_excursion > 2.0:
        raise TrimFailure(f"connector leaves 2B at ball {ball}")

    # splice simplicity at junction scale.  The trim offsets live many
    # orders of magnitude below one ulp of the absolute coordinates, so
    # summing them in doubles would erase them; instead the five junction
    # segments (left stub, three bridge edges, right stub) are built as
    # exact rationals (anchor + offset, added in Fraction arithmetic) and
    # every non-adjacent pair is checked for intersection with exact
    # orientation predicates.
    segs = [
        (_fr_pt(lp.vertices[-2]), _jpt(aL, p_rel)),
        (_jpt(aL, p_rel), _jpt(aL, tau_R * u_hat)),
        (_jpt(aL, tau_R * u_hat), _jpt(aR, -sigma_L * u_hat)),
        (_jpt(aR, -sigma_L * u_hat), _jpt(aR, q_rel)),
        (_jpt(aR, q_rel), _fr_pt(rp.vertices[1])),
    ]
    for i in range(len(segs)):
        for j in range(i + 2, len(segs)):
            if _segs_intersect_exact(*segs[i], *segs[j]):
                raise TrimFailure(
                    f"spliced triple self-intersects at "
                    f"{left_key}/{right_key} (segments {i}/{j})"
                )

    # junction vertices as (base, tiny offset) pairs: base 0 = left anchor,
    # base 1 = right anchor; offsets stay at their own scale so pairwise
    # distances do not collapse in absolute coordinates
    pts = [
        (0, 2.0 * s_star * v_in),
        (0, p_rel),
        (0, tau_R * u_hat),
        (1, -sigma_L * u_hat),
        (1, q_rel),
        (1, 2.0 * s_tilde * v_out),
    ]

    def jdist(i, j):
        (bi, oi), (bj, oj) = pts[i], pts[j]
        base = e * (bj - bi)
        return float(np.hypot(*(base + (oj - oi))))

    ts = [
        b_hat - 2 * (b_hat - b_tilde),
        b_tilde,
        tR,
        tL,
        a_tilde,
        a_hat + 2 * (a_tilde - a_hat),
    ]
    ratios = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            dd = jdist(i, j)
            dt = float(ts[j] - ts[i])
            if dd > 0 and dt > 0:
                ratios.append(dd / dt)
    junction_L = max(ratios) / min(ratios)

    return Connector(
        left_key=left_key,
        right_key=right_key,
        ball=ball,
        theta=theta,
        theta_d=theta_d,
        Gamma=Gamma,
        b_tilde=b_tilde,
        tR=tR,
        tL=tL,
        a_tilde=a_tilde,
        gamma=gamma,
        s_star=s_star,
        s_tilde=s_tilde,
        g0=g0,
        clearance_to_H=math.nan,
        ball_excursion=ball_excursion,
        junction_L=junction_L,
        phase=phase,
    )


def _adjacent_pairs(intervals: IntervalTree) -> List[Tuple[IKey, IKey]]:
    """Consecutive order-list entries sharing an endpoint (no residual block
    in between)."""
    out = []
    for k1, k2 in zip(intervals.order, intervals.order[1:]):
        if intervals.I[k1].hi == intervals.I[k2].lo:
            out.append((k1, k2))
    return out


def _connector_clearance(
    conn: Connector, system: ArcSystem, tree: DefiningTree
) -> float:
    """Min distance from the spliced curve to every uninvolved piece."""
    best = math.inf
    gv = conn.gamma.vertices
    for k, piece in system.pieces.items():
        if k in (conn.left_key, conn.right_key):
            continue
        pv = piece.vertices
        gap = max(
            float(pv[:, 0].min() - gv[:, 0].max()),
            float(gv[:, 0].min() - pv[:, 0].max()),
            float(pv[:, 1].min() - gv[:, 1].max()),
            float(gv[:, 1].min() - pv[:, 1].max()),
            0.0,
        )
        if gap >= best:
            continue
        best = min(best, polyline_min_dist(gv, pv))
    return best


def validate_theta(
    result: ModificationResult, theta: float, kappa: Dict[Word, float]
):
    """theta must sit strictly below kappa_w/2 for every arc (the trimming
    inequalities consume 2*theta*d of the kappa_w*d separation budget)."""
    for w, k_w in kappa.items():
        if not theta < 0.5 * k_w:
            raise TrimFailure(
                f"theta {theta:g} >= kappa/2 = {0.5 * k_w:g} for word {w}"
            )


def run_modifications(
    tree: DefiningTree,
    system: ArcSystem,
    intervals: IntervalTree,
    theta_override: Optional[float] = None,
) -> ModificationResult:
    """Both connector phases plus the validity measurements.

    `theta_override` substitutes the computed theta (used by fault-injection
    tests); the kappa/2 validation still runs and rejects oversized values.
    """
    result = ModificationResult()
    for w in system.owners():
        k_w, comp = compute_kappa(tree, system, w)
        result.kappa[w] = k_w
        result.kappa_comparison[w] = comp

    theta = compute_theta(tree, system) if theta_override is None else theta_override
    validate_theta(result, theta, result.kappa)
    result.theta = theta

    for key in intervals.order:
        hat = intervals.Ihat[key]
        result.trims[key] = [hat.lo, hat.hi]

    pairs = _adjacent_pairs(intervals)
    I1, _, _ = two_coloring(intervals)
    in_I1 = set(I1)
    phase1 = [p for p in pairs if p[1] in in_I1]
    phase2 = [p for p in pairs if p[1] not in in_I1]

    def run_phase(phase_pairs, theta_phase, phase):
        for left, right in phase_pairs:
            conn = build_connector(
                tree, system, left, right, theta_phase, intervals, result.trims, phase
            )
            conn.clearance_to_H = _connector_clearance(conn, system, tree)
            if conn.clearance_to_H <= conn.theta_d:
                raise TrimFailure(
                    f"connector at {left}/{right} too close to other arcs"
                )
            result.trims[left][1] = conn.b_tilde
            result.trims[right][0] = conn.a_tilde
            result.connectors.append(conn)
            # eq:bt / eq:at analogues with the measured top speed
            speed = system.max_speed_by_word[system.pieces[left].owner]
            margin = float(intervals.Ihat[left].hi - conn.b_tilde) * speed / conn.theta_d
            result.trim_margin = min(result.trim_margin, margin)
            speed = system.max_speed_by_word[system.pieces[right].owner]
            margin = float(conn.a_tilde - intervals.Ihat[right].lo) * speed / conn.theta_d
            result.trim_margin = min(result.trim_margin, margin)

    run_phase(phase1, theta, 1)

    # refresh beta* with the realized phase-1 clearances before phase 2
    beta2 = system.beta_star
    for conn in result.connectors:
        w = conn.right_key[0][:-1]
        beta2 = min(beta2, conn.clearance_to_H / tree.node(w).diam_U)
    result.beta_star_refreshed = beta2
    theta2 = (
        compute_theta(tree, system, beta_star=beta2)
        if theta_override is None
        else theta_override
    )
    validate_theta(result, theta2, result.kappa)
    result.theta_phase2 = theta2

    run_phase(phase2, theta2, 2)

    # every piece keeps a nondegenerate middle (eq:ba analogue), exactly
    for key, (lo, hi) in result.trims.items():
        if not lo < hi:
            raise TrimFailure(f"piece {key} trimmed to emptiness")
    return result


def connectors_to_json(result: ModificationResult) -> dict:
    def wkey(w):
        return ".".join(map(str, w)) if w else "eps"

    def fr(x: Fraction):
        return [x.numerator, x.denominator]

    return {
        "theta": result.theta,
        "theta_phase2": result.theta_phase2,
        "beta_star_refreshed": result.beta_star_refreshed,
        "trim_margin": result.trim_margin,
        "kappa": {wkey(w): v for w, v in result.kappa.items()},
        "kappa_comparison": {
            wkey(w): v for w, v in result.kappa_comparison.items()
        },
        "connectors": [
            {
                "left": f"{wkey(c.left_key[0])}:{c.left_key[1]}",
                "right": f"{wkey(c.right_key[0])}:{c.right_key[1]}",
                "ball": [wkey(c.ball[0]), c.ball[1]],
                "phase": c.phase,
                "theta_d": c.theta_d,
                "b_tilde": fr(c.b_tilde),
                "tR": fr(c.tR),
                "tL": fr(c.tL),
                "a_tilde": fr(c.a_tilde),
                "s_star": c.s_star,
                "s_tilde": c.s_tilde,
                "anchor_gap": c.g0,
                "clearance": c.clearance_to_H,
                "ball_excursion": c.ball_excursion,
                "junction_L": c.junction_L,
            }
            for c in result.connectors
        ],
    }
