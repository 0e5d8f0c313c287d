"""Exact rational interval system mirroring a word tree.

Every subdivided word w with n children splits its block J_w into 2n+1
equal parts: gaps I_{w,0..n} interleaved with child blocks J_{w1..wn}.
All arithmetic is `fractions.Fraction`; the invariants are bit-exact test
targets.

Words are tuples of positive integers; the root block is the word (1,)
carrying J = [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from cantorarc.errors import KeyNotFound

Word = Tuple[int, ...]
IKey = Tuple[Word, int]


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        assert self.lo < self.hi

    def __len__(self):  # pragma: no cover - use .length
        raise TypeError("use .length")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def middle_third(self) -> "RationalInterval":
        third = self.length / 3
        return RationalInterval(self.lo + third, self.hi - third)

    def contains(self, t: Fraction) -> bool:
        return self.lo <= t <= self.hi


@dataclass
class IntervalTree:
    """Blocks J_w, gaps I_{w,i}, middle thirds Î_{w,i}, and scale factors."""

    J: Dict[Word, RationalInterval] = field(default_factory=dict)
    I: Dict[IKey, RationalInterval] = field(default_factory=dict)
    Ihat: Dict[IKey, RationalInterval] = field(default_factory=dict)
    Lambda: Dict[Word, Fraction] = field(default_factory=dict)
    n_children: Dict[Word, int] = field(default_factory=dict)
    order: List[IKey] = field(default_factory=list)
    blocks: List[Word] = field(default_factory=list)  # residual J blocks, in order
    sequence: List[tuple] = field(default_factory=list)  # ('I', key)/('J', word)

    def subdivided(self, w: Word) -> bool:
        return self.n_children.get(w, 0) >= 1


def build_intervals(n_children: Dict[Word, int], diam: Optional[Dict[Word, float]] = None) -> IntervalTree:
    """Build the full interval system for a finite word tree.

    n_children maps each subdivided word (root (1,) included when it has
    children) to its child count.  diam optionally supplies region
    diameters for the scale factors Λ_w = (2n_w+1)·diam U_w / |J_w|.
    """
    t = IntervalTree(n_children=dict(n_children))
    root: Word = (1,)
    t.J[root] = RationalInterval(Fraction(0), Fraction(1))

    def subdivide(w: Word):
        n = t.n_children.get(w, 0)
        if n < 1:
            t.blocks.append(w)
            t.sequence.append(("J", w))
            return
        Jw = t.J[w]
        unit = Jw.length / (2 * n + 1)
        a = Jw.lo
        if diam is not None and w in diam:
            t.Lambda[w] = Fraction(float(diam[w])) / unit
        for i in range(n + 1):
            I = RationalInterval(a + 2 * i * unit, a + (2 * i + 1) * unit)
            t.I[(w, i)] = I
            t.Ihat[(w, i)] = I.middle_third()
        for i in range(1, n + 1):
            t.J[w + (i,)] = RationalInterval(a + (2 * i - 1) * unit, a + 2 * i * unit)
        # in-order walk: I_{w,0}, J_{w1}, I_{w,1}, …, J_{wn}, I_{w,n}
        t.order.append((w, 0))
        t.sequence.append(("I", (w, 0)))
        for i in range(1, n + 1):
            subdivide(w + (i,))
            t.order.append((w, i))
            t.sequence.append(("I", (w, i)))

    subdivide(root)
    t.order.sort(key=lambda k: t.I[k].lo)
    return t


def adjacency(t: IntervalTree, key: IKey):
    """(left, right) neighbors of a gap interval, None where no gap interval
    shares the endpoint (domain ends, or a residual block in between)."""
    if key not in t.I:
        raise KeyNotFound(f"unknown interval key {key}")
    pos = t.order.index(key)
    left = right = None
    if pos > 0:
        cand = t.order[pos - 1]
        if t.I[cand].hi == t.I[key].lo:
            left = cand
    if pos < len(t.order) - 1:
        cand = t.order[pos + 1]
        if t.I[cand].lo == t.I[key].hi:
            right = cand
    return left, right


def two_coloring(t: IntervalTree):
    """Strictly alternating 2-coloring along the order list.

    Returns (I1, I2, end_flag); I_{1,0} lands in I1, and end_flag marks the
    case where the last interval falls in I2.
    """
    I1, I2 = [], []
    for pos, key in enumerate(t.order):
        (I1 if pos % 2 == 0 else I2).append(key)
    end_flag = (len(t.order) % 2) == 0
    return I1, I2, end_flag


def intervals_to_json(t: IntervalTree) -> dict:
    def enc(iv: RationalInterval):
        return {
            "lo": [iv.lo.numerator, iv.lo.denominator],
            "hi": [iv.hi.numerator, iv.hi.denominator],
        }

    wkey = lambda w: ".".join(map(str, w))
    return {
        "J": {wkey(w): enc(iv) for w, iv in t.J.items()},
        "I": {f"{wkey(w)}:{i}": enc(iv) for (w, i), iv in t.I.items()},
        "Ihat": {f"{wkey(w)}:{i}": enc(iv) for (w, i), iv in t.Ihat.items()},
        "Lambda": {
            wkey(w): [v.numerator, v.denominator] for w, v in t.Lambda.items()
        },
        "order": [f"{wkey(w)}:{i}" for (w, i) in t.order],
        "blocks": [wkey(w) for w in t.blocks],
    }
