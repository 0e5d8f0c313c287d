"""Piecewise-linear parameterized curves with exact rational breakpoints.

Vertices are float; parameters are `fractions.Fraction` so interval
bookkeeping downstream stays bit-exact.  All distance measurements are done
in float on the vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from cantorarc.errors import DegenerateCurve


def seg_point_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Distance from point p to segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(p - (a + t * ab))))


def _segs_points_dist(P: np.ndarray, Q: np.ndarray) -> float:
    """Min distance between any vertex of Q and any segment of P (vectorized)."""
    a = P[:-1]
    ab = P[1:] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0.0] = 1.0
    ap = Q[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("kij,ij->ki", ap, ab) / denom, 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.hypot(Q[:, None, 0] - proj[:, :, 0], Q[:, None, 1] - proj[:, :, 1])
    return float(d.min())


def _seg_seg_dist(a, b, c, d) -> float:
    """Distance between segments [a,b] and [c,d]."""

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)):
        return 0.0
    return min(
        seg_point_dist(c, a, b),
        seg_point_dist(d, a, b),
        seg_point_dist(a, c, d),
        seg_point_dist(b, c, d),
    )


def polyline_min_dist(P: np.ndarray, Q: np.ndarray) -> float:
    """Exact min distance between two polylines given as vertex arrays."""
    P = np.atleast_2d(P)
    Q = np.atleast_2d(Q)
    if len(P) == 1 and len(Q) == 1:
        return float(np.hypot(*(P[0] - Q[0])))
    if len(P) == 1:
        return _segs_points_dist(Q, P)
    if len(Q) == 1:
        return _segs_points_dist(P, Q)
    # Vertex-to-segment distances catch every non-crossing configuration;
    # crossings need the full segment-segment pass, which we only run on
    # nearby pairs found by a coarse bbox check.
    best = min(_segs_points_dist(P, Q), _segs_points_dist(Q, P))
    if best == 0.0:
        return 0.0
    aP, bP = P[:-1], P[1:]
    aQ, bQ = Q[:-1], Q[1:]
    loP = np.minimum(aP, bP) - best
    hiP = np.maximum(aP, bP) + best
    loQ = np.minimum(aQ, bQ)
    hiQ = np.maximum(aQ, bQ)
    overlap = (
        (loP[:, None, 0] <= hiQ[None, :, 0])
        & (hiP[:, None, 0] >= loQ[None, :, 0])
        & (loP[:, None, 1] <= hiQ[None, :, 1])
        & (hiP[:, None, 1] >= loQ[None, :, 1])
    )
    for i, j in zip(*np.nonzero(overlap)):
        d = _seg_seg_dist(aP[i], bP[i], aQ[j], bQ[j])
        if d < best:
            best = d
            if best == 0.0:
                return 0.0
    return best


def polyline_length(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    if len(v) < 2:
        return 0.0
    return float(np.hypot(*(np.diff(v, axis=0).T)).sum())


def polyline_self_intersects(vertices: np.ndarray) -> bool:
    """True if any two non-adjacent segments of the polyline touch."""
    v = np.asarray(vertices, dtype=float)
    n = len(v) - 1
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1 and np.allclose(v[0], v[-1]):
                continue  # closed curve junction
            if _seg_seg_dist(v[i], v[i + 1], v[j], v[j + 1]) == 0.0:
                return True
    return False


@dataclass(frozen=True)
class ParamCurve:
    """Piecewise-linear curve t ↦ plane, rational breakpoints, float vertices."""

    breakpoints: tuple  # Fractions, strictly increasing
    vertices: np.ndarray  # shape (m+1, 2)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", verts)
        bps = tuple(Fraction(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        assert len(bps) == len(verts)
        assert all(a < b for a, b in zip(bps, bps[1:]))

    @property
    def t0(self) -> Fraction:
        return self.breakpoints[0]

    @property
    def t1(self) -> Fraction:
        return self.breakpoints[-1]

    def _tfloat(self) -> np.ndarray:
        return np.array([float(t) for t in self.breakpoints])

    def evaluate(self, ts) -> np.ndarray:
        """Evaluate at float parameters (clamped to the domain)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        tf = self._tfloat()
        x = np.interp(ts, tf, self.vertices[:, 0])
        y = np.interp(ts, tf, self.vertices[:, 1])
        return np.column_stack([x, y])

    def point_at(self, t: Fraction) -> np.ndarray:
        """Evaluate at an exact rational parameter (exact segment location)."""
        t = Fraction(t)
        bps = self.breakpoints
        if t <= bps[0]:
            return self.vertices[0].copy()
        if t >= bps[-1]:
            return self.vertices[-1].copy()
        import bisect

        k = bisect.bisect_right(bps, t) - 1
        span = bps[k + 1] - bps[k]
        frac = float((t - bps[k]) / span)
        return (1 - frac) * self.vertices[k] + frac * self.vertices[k + 1]

    @property
    def length(self) -> float:
        return polyline_length(self.vertices)

    @property
    def diam(self) -> float:
        from cantorarc.geometry import diameter

        return diameter(self.vertices)

    def subcurve(self, a: Fraction, b: Fraction) -> "ParamCurve":
        """Restriction to [a, b] ⊆ domain, with exact cut parameters."""
        a, b = Fraction(a), Fraction(b)
        assert self.t0 <= a < b <= self.t1
        bps = [a]
        verts = [self.point_at(a)]
        for t, v in zip(self.breakpoints, self.vertices):
            if a < t < b:
                bps.append(t)
                verts.append(v)
        bps.append(b)
        verts.append(self.point_at(b))
        return ParamCurve(tuple(bps), np.asarray(verts))

    def dedupe(self) -> "ParamCurve":
        """Drop interior vertices that coincide (in float) with their
        predecessor; parameter gaps collapse onto the surviving vertex."""
        keep = [0]
        for k in range(1, len(self.vertices)):
            if not np.array_equal(self.vertices[k], self.vertices[keep[-1]]):
                keep.append(k)
        if keep[-1] != len(self.vertices) - 1:
            keep[-1] = len(self.vertices) - 1
        if len(keep) < 2:
            raise DegenerateCurve("curve collapses to a point")
        bps = tuple(self.breakpoints[k] for k in keep)
        return ParamCurve(bps, self.vertices[list(keep)])


def reparam_to_interval(vertices: np.ndarray, lo: Fraction, hi: Fraction) -> ParamCurve:
    """Constant-speed parameterization of a polyline over [lo, hi].

    Breakpoints are exact rationals obtained from the float cumulative
    lengths (Fraction(float) is exact), so downstream interval arithmetic
    stays rational.
    """
    v = np.asarray(vertices, dtype=float)
    keep = [0]
    for k in range(1, len(v)):
        if not np.array_equal(v[k], v[keep[-1]]):
            keep.append(k)
    v = v[keep]
    if len(v) < 2:
        raise DegenerateCurve("zero-length polyline")
    seg = np.hypot(*(np.diff(v, axis=0).T))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = Fraction(float(cum[-1]))
    lo, hi = Fraction(lo), Fraction(hi)
    span = hi - lo
    bps = [lo + Fraction(float(c)) / total * span for c in cum]
    bps[-1] = hi
    # Guard against float-cumsum ties producing equal rationals.
    out_b = [bps[0]]
    out_v = [v[0]]
    for t, vert in zip(bps[1:], v[1:]):
        if t > out_b[-1]:
            out_b.append(t)
            out_v.append(vert)
    if out_b[-1] != hi:
        out_b[-1] = hi
    return ParamCurve(tuple(out_b), np.asarray(out_v))


def measure_quasisimilarity(curve: ParamCurve, max_vertices: int = 400):
    """(L, lam): spread and scale of the vertex-pair distance/parameter ratios.

    L = (max pair ratio)/(min pair ratio) over distinct float vertices,
    lam = length/|domain|.  A straight constant-speed segment gives L = 1.
    """
    c = curve.dedupe()
    verts = c.vertices
    ts = np.array([float(t) for t in c.breakpoints])
    if len(verts) > max_vertices:
        idx = np.unique(np.linspace(0, len(verts) - 1, max_vertices).astype(int))
        verts = verts[idx]
        ts = ts[idx]
    d = np.hypot(
        verts[:, None, 0] - verts[None, :, 0], verts[:, None, 1] - verts[None, :, 1]
    )
    dt = np.abs(ts[:, None] - ts[None, :])
    iu = np.triu_indices(len(verts), k=1)
    d, dt = d[iu], dt[iu]
    ok = dt > 0
    ratios = d[ok] / dt[ok]
    ratios = ratios[ratios > 0]
    if len(ratios) == 0:
        raise DegenerateCurve("no measurable vertex pairs")
    L = float(ratios.max() / ratios.min())
    lam = curve.length / float(curve.t1 - curve.t0)
    return L, lam


def concat_curves(pieces: Sequence[ParamCurve]) -> ParamCurve:
    """Concatenate curves whose domains and endpoints chain exactly."""
    assert pieces
    bps = list(pieces[0].breakpoints)
    verts = list(np.asarray(pieces[0].vertices))
    for nxt in pieces[1:]:
        assert nxt.t0 == bps[-1], "parameter domains must chain"
        for t, v in zip(nxt.breakpoints, nxt.vertices):
            if t > bps[-1]:
                bps.append(t)
                verts.append(v)
    return ParamCurve(tuple(bps), np.asarray(verts))
