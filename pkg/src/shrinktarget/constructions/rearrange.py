"""Measure-preserving piecewise translations carrying one nested family onto another."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from ..arcs import ONE, ZERO, ArcSet, format_rational, frac, point
from ..maps import CircleMap
from ..targets import HitRecord, TargetSeq, AbstractSets


class MeasureMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    start: Fraction
    length: Fraction
    offset: Fraction       # image = [start + offset, start + offset + length), no wrap

    @property
    def image_start(self) -> Fraction:
        return self.start + self.offset


class Rearrangement(CircleMap):
    """sigma as finitely many translated pieces; sources and images each tile [0, 1)."""

    name = "rearrangement"

    def __init__(self, pieces):
        self.pieces = tuple(sorted(pieces, key=lambda p: p.start))
        self._src = [p.start for p in self.pieces]
        self._by_image = sorted(self.pieces, key=lambda p: p.image_start)
        self._dst = [p.image_start for p in self._by_image]
        self._check_tiling()

    def _check_tiling(self):
        for seq, key in ((self.pieces, lambda p: p.start), (self._by_image, lambda p: p.image_start)):
            pos = ZERO
            for p in seq:
                if p.length <= 0 or key(p) != pos:
                    raise ValueError("rearrangement pieces must tile the circle")
                pos = key(p) + p.length
            if pos != ONE:
                raise ValueError("rearrangement pieces must tile the circle")

    @classmethod
    def identity(cls) -> "Rearrangement":
        return cls([Piece(ZERO, ONE, ZERO)])

    def apply(self, x):
        x = point(x)
        p = self.pieces[bisect_right(self._src, x) - 1]
        return x + p.offset

    def inverse_apply(self, x):
        y = point(x)
        p = self._by_image[bisect_right(self._dst, y) - 1]
        return y - p.offset

    def image_set(self, s):
        return ArcSet([(a + p.offset, b + p.offset)
                       for p in self.pieces for a, b in s.clip(p.start, p.start + p.length)])

    def preimage_set(self, s):
        return ArcSet([(a - p.offset, b - p.offset)
                       for p in self._by_image for a, b in s.clip(p.image_start, p.image_start + p.length)])

    def to_json(self):
        return {"rearrangement": [{"start": format_rational(p.start), "length": format_rational(p.length),
                                   "offset": format_rational(p.offset)} for p in self.pieces]}

    @classmethod
    def from_json(cls, data: dict) -> "Rearrangement":
        return cls([Piece(frac(d["start"]), frac(d["length"]), frac(d["offset"]))
                    for d in data["rearrangement"]])


def _rings(family):
    """X minus F_1, F_1 minus F_2, ..., F_{L-1} minus F_L, F_L."""
    outer = [ArcSet.full()] + list(family)
    rings = [a - b for a, b in zip(outer, outer[1:])]
    rings.append(outer[-1])
    return rings


def _match(src: ArcSet, dst: ArcSet):
    """Greedy two-pointer matching of linear fragments in circle order."""
    a, b = list(src.pieces), list(dst.pieces)
    i = j = 0
    sa = a[0][0] if a else None
    sb = b[0][0] if b else None
    out = []
    while i < len(a) and j < len(b):
        length = min(a[i][1] - sa, b[j][1] - sb)
        out.append(Piece(sa, length, sb - sa))
        sa += length
        sb += length
        if sa == a[i][1]:
            i += 1
            sa = a[i][0] if i < len(a) else None
        if sb == b[j][1]:
            j += 1
            sb = b[j][0] if j < len(b) else None
    return out


def _coalesce(pieces):
    pieces = sorted(pieces, key=lambda p: p.start)
    out = []
    for p in pieces:
        if out and out[-1].offset == p.offset and out[-1].start + out[-1].length == p.start:
            q = out.pop()
            p = Piece(q.start, q.length + p.length, p.offset)
        out.append(p)
    return out


def rearrangement_map(sources, targets) -> Rearrangement:
    """sigma with sigma(B_l) = C_l for every level, matching ring by ring."""
    sources, targets = list(sources), list(targets)
    if len(sources) != len(targets):
        raise ValueError("source and target families must have the same length")
    for name, fam in (("source", sources), ("target", targets)):
        for level in range(1, len(fam)):
            if not fam[level].issubset(fam[level - 1]):
                raise ValueError(f"{name} family is not nested at level {level + 1}")
    for level, (b, c) in enumerate(zip(sources, targets), start=1):
        if b.measure() != c.measure():
            raise MeasureMismatchError(
                f"level {level}: measure(B) = {b.measure()} differs from measure(C) = {c.measure()}")
    pieces = []
    for rb, rc in zip(_rings(sources), _rings(targets)):
        pieces.extend(_match(rb, rc))
    return Rearrangement(_coalesce(pieces))


def conjugated_hits(tau: CircleMap, sigma: Rearrangement, x, targets, n_max: int) -> HitRecord:
    """Hits of omega = sigma tau sigma^-1 from x, computed two ways that must agree.

    Route one iterates omega directly; route two runs tau from sigma^-1(x)
    against the pulled-back targets sigma^-1(B_n).
    """
    if n_max < 1:
        raise ValueError("horizon must be >= 1")
    if not isinstance(targets, TargetSeq):
        targets = AbstractSets(targets)
    targets.check_horizon(n_max)
    start = point(x)
    direct = []
    y = start
    for n in range(1, n_max + 1):
        y = sigma.apply(tau.apply(sigma.inverse_apply(y)))
        if targets.hit(n, y, start):
            direct.append(n)
    pulled = []
    z = sigma.inverse_apply(start)
    for n in range(1, n_max + 1):
        z = tau.apply(z)
        if sigma.preimage_set(targets.set_at(n, start)).contains(z):
            pulled.append(n)
    if direct != pulled:
        raise AssertionError(f"conjugation routes disagree: {direct} vs {pulled}")
    return HitRecord(tuple(direct), n_max)
