"""Exact arithmetic on points and finite unions of half-open arcs of the circle.

The circle is [0, 1) with addition mod 1.  Every set is stored as a sorted
tuple of disjoint, non-abutting linear pieces ``[a, b)`` with
``0 <= a < b <= 1``.  A piece ending at 1 and a piece starting at 0 together
form one wrapped arc; the ``arcs`` view merges them back.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are refused: nothing in this package is allowed to round.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def point(value) -> Fraction:
    """Reduce a rational mod 1 into [0, 1)."""
    v = frac(value)
    if 0 <= v.numerator < v.denominator:
        return v
    return v - (v.numerator // v.denominator)


def format_rational(value: Fraction) -> str:
    value = frac(value)
    return f"{value.numerator}/{value.denominator}"


def circle_distance(a: Fraction, b: Fraction) -> Fraction:
    d = abs(a - b)
    d -= d.numerator // d.denominator
    return min(d, 1 - d)


@dataclass(frozen=True)
class Arc:
    """Half-open arc ``[start, start + length)`` taken mod 1; length 1 is the whole circle."""

    start: Fraction
    length: Fraction

    def __post_init__(self):
        object.__setattr__(self, "start", point(self.start))
        object.__setattr__(self, "length", frac(self.length))
        if not 0 < self.length <= 1:
            raise ValueError(f"arc length must lie in (0, 1], got {self.length}")

    @property
    def end(self) -> Fraction:
        return point(self.start + self.length)

    def pieces(self):
        if self.length == 1:
            return [(ZERO, ONE)]
        stop = self.start + self.length
        if stop <= 1:
            return [(self.start, stop)]
        return [(self.start, ONE), (ZERO, stop - 1)]

    def to_json(self) -> dict:
        return {"start": format_rational(self.start), "length": format_rational(self.length)}


def _merge(pieces: Iterable[tuple]) -> tuple:
    ordered = sorted(p for p in pieces if p[0] < p[1])
    out = []
    for a, b in ordered:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


class ArcSet:
    """Canonical finite union of half-open arcs.

    Instances are immutable and compare equal exactly when they are equal as
    point sets.
    """

    __slots__ = ("_iv", "_starts", "_measure")

    def __init__(self, pieces: Iterable[tuple] = (), *, _canonical: bool = False):
        self._iv = tuple(pieces) if _canonical else _merge(pieces)
        self._starts = None
        self._measure = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls((), _canonical=True)

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((ZERO, ONE),), _canonical=True)

    @classmethod
    def from_arcs(cls, arcs: Iterable[Arc]) -> "ArcSet":
        pieces = []
        for arc in arcs:
            pieces.extend(arc.pieces())
        return cls(pieces)

    @classmethod
    def interval(cls, start, stop) -> "ArcSet":
        """``[start, stop)`` for ``0 <= start <= stop <= 1`` (no wrapping)."""
        a, b = frac(start), frac(stop)
        if not 0 <= a <= b <= 1:
            raise ValueError(f"need 0 <= start <= stop <= 1, got [{a}, {b})")
        return cls(((a, b),) if a < b else (), _canonical=True)

    @classmethod
    def arc(cls, start, length) -> "ArcSet":
        return cls.from_arcs([Arc(frac(start), frac(length))])

    @classmethod
    def ball(cls, center, radius) -> "ArcSet":
        """Half-open realization ``[c - r, c + r)`` of the closed ball of radius r."""
        r = frac(radius)
        if r <= 0:
            return cls.empty()
        if 2 * r >= 1:
            return cls.full()
        return cls.arc(point(frac(center) - r), 2 * r)

    # -- views --------------------------------------------------------------

    @property
    def pieces(self) -> tuple:
        return self._iv

    @property
    def arcs(self) -> list:
        """Canonical arcs sorted by start, with the 1|0 seam merged into one wrapped arc."""
        iv = self._iv
        if not iv:
            return []
        if iv == ((ZERO, ONE),):
            return [Arc(ZERO, ONE)]
        if len(iv) > 1 and iv[0][0] == 0 and iv[-1][1] == 1:
            (a0, b0), (al, _) = iv[0], iv[-1]
            middle = [Arc(a, b - a) for a, b in iv[1:-1]]
            return middle + [Arc(al, (1 - al) + b0)]
        return [Arc(a, b - a) for a, b in iv]

    def measure(self) -> Fraction:
        if self._measure is None:
            # integer sum over a common denominator; much faster than chained Fraction adds
            den = 1
            for a, b in self._iv:
                den = lcm(den, a.denominator, b.denominator)
            total = sum(b.numerator * (den // b.denominator) - a.numerator * (den // a.denominator)
                        for a, b in self._iv)
            self._measure = Fraction(total, den)
        return self._measure

    def is_empty(self) -> bool:
        return not self._iv

    def is_full(self) -> bool:
        return self._iv == ((ZERO, ONE),)

    def __len__(self):
        return len(self.arcs)

    def __bool__(self):
        return bool(self._iv)

    def __eq__(self, other):
        return isinstance(other, ArcSet) and self._iv == other._iv

    def __hash__(self):
        return hash(self._iv)

    def __repr__(self):
        inner = ", ".join(f"[{a.start}, +{a.length})" for a in self.arcs)
        return f"ArcSet({inner})"

    # -- membership ---------------------------------------------------------

    def contains(self, x) -> bool:
        x = point(x)
        if self._starts is None:
            self._starts = [a for a, _ in self._iv]
        i = bisect_right(self._starts, x) - 1
        return i >= 0 and x < self._iv[i][1]

    __contains__ = contains

    # -- Boolean algebra ----------------------------------------------------

    def union(self, other: "ArcSet") -> "ArcSet":
        if not other._iv:
            return self
        if not self._iv:
            return other
        return ArcSet(self._iv + other._iv)

    def complement(self) -> "ArcSet":
        out = []
        cursor = ZERO
        for a, b in self._iv:
            if a > cursor:
                out.append((cursor, a))
            cursor = b
        if cursor < 1:
            out.append((cursor, ONE))
        return ArcSet(out, _canonical=True)

    def intersect(self, other: "ArcSet") -> "ArcSet":
        x, y = self._iv, other._iv
        i = j = 0
        out = []
        while i < len(x) and j < len(y):
            a = max(x[i][0], y[j][0])
            b = min(x[i][1], y[j][1])
            if a < b:
                out.append((a, b))
            if x[i][1] < y[j][1]:
                i += 1
            else:
                j += 1
        # pieces from two canonical sets never abut each other here
        return ArcSet(out, _canonical=True)

    def difference(self, other: "ArcSet") -> "ArcSet":
        return self.intersect(other.complement())

    def issubset(self, other: "ArcSet") -> bool:
        return self.difference(other).is_empty()

    def isdisjoint(self, other: "ArcSet") -> bool:
        return self.intersect(other).is_empty()

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def __invert__(self):
        return self.complement()

    # -- geometry -----------------------------------------------------------

    def translate(self, offset) -> "ArcSet":
        t = point(offset)
        if t == 0 or not self._iv:
            return self
        out = []
        for a, b in self._iv:
            a2, b2 = a + t, b + t
            if b2 <= 1:
                out.append((a2, b2))
            elif a2 >= 1:
                out.append((a2 - 1, b2 - 1))
            else:
                out.append((a2, ONE))
                out.append((ZERO, b2 - 1))
        return ArcSet(out)

    def clip(self, start, stop) -> list:
        """Linear pieces of the set inside ``[start, stop)`` (no wrap)."""
        out = []
        for a, b in self._iv:
            if b <= start:
                continue
            if a >= stop:
                break
            out.append((max(a, start), min(b, stop)))
        return out

    # -- serialization ------------------------------------------------------

    def to_json(self) -> list:
        return [arc.to_json() for arc in self.arcs]

    @classmethod
    def from_json(cls, data: Sequence[dict]) -> "ArcSet":
        return cls.from_arcs(Arc(frac(d["start"]), frac(d["length"])) for d in data)


def normalize(arcs: Iterable[Arc]) -> ArcSet:
    return ArcSet.from_arcs(arcs)


def union(a: ArcSet, b: ArcSet) -> ArcSet:
    return a.union(b)


def intersect(a: ArcSet, b: ArcSet) -> ArcSet:
    return a.intersect(b)


def complement(a: ArcSet) -> ArcSet:
    return a.complement()


def measure(a: ArcSet) -> Fraction:
    return a.measure()


def contains(a: ArcSet, x) -> bool:
    return a.contains(x)


def union_all(sets: Iterable[ArcSet]) -> ArcSet:
    pieces = []
    for s in sets:
        pieces.extend(s.pieces)
    return ArcSet(pieces)


def circular_gaps(points: Iterable) -> list:
    """Sorted gaps between circularly consecutive distinct points; they sum to 1."""
    pts = sorted({point(p) for p in points})
    if not pts:
        raise ValueError("no orbit data: circular_gaps needs at least one point")
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    gaps.append(1 - pts[-1] + pts[0])
    return sorted(gaps)
