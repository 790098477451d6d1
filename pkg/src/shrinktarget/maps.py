"""Exact measure-preserving maps of the circle.

Rotation (by a continued-fraction convergent), the doubling map, the
von Neumann-Kakutani odometer and interval exchange transformations.  All
points are Fractions; set images are exact ArcSets.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Iterator, Sequence

from .arcs import ONE, ZERO, Arc, ArcSet, frac, point


def _reduced(n: int, d: int) -> Fraction:
    """Fraction n/d for coprime n, d > 0, skipping the gcd (costly for long dyadic orbits)."""
    f = object.__new__(Fraction)
    f._numerator, f._denominator = n, d
    return f


class NotInvertibleError(ValueError):
    """Raised when an inverse or forward set image is requested from a non-invertible map."""


# ---------------------------------------------------------------------------
# continued fractions


def convergents(quotients: Sequence[int]) -> list:
    """Convergents p_k/q_k of [0; a_1, ..., a_d] as (p, q) integer pairs."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def continued_fraction(theta, max_depth: int | None = None) -> list:
    """Euclidean-algorithm partial quotients of theta in (0, 1).

    The exact expansion ends with a quotient >= 2 (unless it is [1], i.e. theta = 1).
    """
    theta = frac(theta)
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    num, den = theta.numerator, theta.denominator
    out = []
    while num and (max_depth is None or len(out) < max_depth):
        a, r = divmod(den, num)
        out.append(a)
        den, num = num, r
    return out


@dataclass(frozen=True)
class RotationAngle:
    quotients: tuple
    value: Fraction = field(init=False)

    def __post_init__(self):
        qs = tuple(int(a) for a in self.quotients)
        if not qs or any(a < 1 for a in qs):
            raise ValueError("quotients must be a nonempty list of positive integers")
        if qs == (1,):
            raise ValueError("[0; 1] is the trivial rotation by 1")
        object.__setattr__(self, "quotients", qs)
        p, q = convergents(qs)[-1]
        object.__setattr__(self, "value", Fraction(p, q))

    @property
    def depth(self) -> int:
        return len(self.quotients)

    @property
    def q(self) -> int:
        return self.value.denominator

    @property
    def realized_value(self) -> Fraction:
        return self.value


def rotation_from_quotients(quotients: Sequence[int]) -> RotationAngle:
    return RotationAngle(tuple(quotients))


def golden_quotients(depth: int) -> list:
    return [1] * depth


def liouville_quotients(depth: int = 8) -> list:
    """Quotients 1, 10, 10^2, ... truncated to ``depth`` terms."""
    return [10 ** k for k in range(depth)]


def rotation_for_horizon(quotient_source, horizon: int, min_depth: int = 1) -> RotationAngle:
    """Shortest prefix of an infinite quotient sequence whose convergent has q >= horizon**2.

    ``quotient_source(depth)`` returns the first ``depth`` quotients.
    """
    depth = max(min_depth, 1)
    while True:
        qs = quotient_source(depth)
        if len(qs) < depth:
            raise ValueError("quotient source exhausted before reaching q >= N^2")
        if qs != [1]:
            angle = RotationAngle(tuple(qs))
            if angle.q >= horizon * horizon:
                return angle
        depth += 1


# ---------------------------------------------------------------------------
# maps


class CircleMap:
    invertible = True
    name = "map"

    def apply(self, x: Fraction) -> Fraction:
        raise NotImplementedError

    def inverse_apply(self, x: Fraction) -> Fraction:
        raise NotImplementedError

    def preimage_set(self, s: ArcSet) -> ArcSet:
        raise NotImplementedError

    def image_set(self, s: ArcSet) -> ArcSet:
        raise NotImplementedError

    def orbit(self, x, n: int) -> Iterator[Fraction]:
        """Stream tau^1 x, ..., tau^n x."""
        if n < 1:
            raise ValueError("orbit length must be >= 1")
        y = point(x)
        for _ in range(n):
            y = self.apply(y)
            yield y

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Rotation(CircleMap):
    angle: RotationAngle
    name = "rotation"

    @classmethod
    def from_quotients(cls, quotients) -> "Rotation":
        return cls(RotationAngle(tuple(quotients)))

    @property
    def theta(self) -> Fraction:
        return self.angle.value

    def apply(self, x):
        return point(frac(x) + self.theta)

    def inverse_apply(self, x):
        return point(frac(x) - self.theta)

    def image_set(self, s):
        return s.translate(self.theta)

    def preimage_set(self, s):
        return s.translate(-self.theta)

    def to_json(self):
        return {"rotation": {"quotients": list(self.angle.quotients)}}


@dataclass(frozen=True)
class Doubling(CircleMap):
    invertible = False
    name = "doubling"

    def apply(self, x):
        x = point(x)
        n, d = x.numerator, x.denominator
        # p/d in lowest terms stays in lowest terms: (2p mod d)/d for odd d, (p mod d/2)/(d/2) for even d
        if d % 2:
            n = 2 * n % d
        else:
            d //= 2
            n %= d
        return _reduced(n, d) if n else ZERO

    def inverse_apply(self, x):
        raise NotInvertibleError("the doubling map is 2-to-1 and has no inverse")

    def image_set(self, s):
        raise NotInvertibleError("forward set images are only supported for invertible maps")

    def preimage_set(self, s):
        half = Fraction(1, 2)
        out = []
        for a, b in s.pieces:
            out.append((a / 2, b / 2))
            out.append((a / 2 + half, b / 2 + half))
        return ArcSet(out)

    def to_json(self):
        return {"doubling": {}}


def _odometer_branch(x: Fraction) -> int:
    """k >= 1 with x in [1 - 2^(1-k), 1 - 2^(-k))."""
    u = 1 - x
    num, den = u.numerator, u.denominator
    k = max(1, den.bit_length() - num.bit_length())
    while den >= num << k:
        k += 1
    while k > 1 and den < num << (k - 1):
        k -= 1
    return k


def _odometer_inverse_branch(y: Fraction) -> int:
    """k >= 1 with y in [2^(-k), 2^(1-k))."""
    num, den = y.numerator, y.denominator
    k = max(1, den.bit_length() - num.bit_length())
    while den > num << k:
        k += 1
    while k > 1 and den <= num << (k - 1):
        k -= 1
    return k


@dataclass(frozen=True)
class Odometer(CircleMap):
    """Binary adding machine: add 1 to the first binary digit and carry to the right.

    Branch k sends [1 - 2^(1-k), 1 - 2^(-k)) onto [2^(-k), 2^(1-k)) by a
    translation.  The point 0 has no preimage in [0, 1): its preimage would
    be the all-ones expansion, i.e. 1.
    """

    name = "odometer"

    def apply(self, x):
        x = point(x)
        k = _odometer_branch(x)
        return x - 1 + Fraction(3, 2 ** k)

    def inverse_apply(self, x):
        y = point(x)
        if y == 0:
            raise NotInvertibleError("0 is not in the image of [0, 1) under the odometer")
        k = _odometer_inverse_branch(y)
        return y + 1 - Fraction(3, 2 ** k)

    @staticmethod
    def _tail_depth_top(s: ArcSet) -> int:
        # smallest K with s ∩ [1 - 2^-K, 1) empty or the whole tail
        a, b = s.pieces[-1]
        gap = 1 - a if b == 1 else 1 - b
        k = 1
        while Fraction(1, 2 ** k) > gap:
            k += 1
        return k

    @staticmethod
    def _tail_depth_bottom(s: ArcSet) -> int:
        a, b = s.pieces[0]
        gap = b if a == 0 else a
        k = 1
        while Fraction(1, 2 ** k) > gap:
            k += 1
        return k

    def image_set(self, s):
        if s.is_empty() or s.is_full():
            return s
        depth = self._tail_depth_top(s)
        out = []
        for k in range(1, depth + 1):
            lo, hi = 1 - Fraction(2, 2 ** k), 1 - Fraction(1, 2 ** k)
            shift = Fraction(3, 2 ** k) - 1
            out.extend((a + shift, b + shift) for a, b in s.clip(lo, hi))
        if s.pieces[-1][1] == 1 and s.pieces[-1][0] <= 1 - Fraction(1, 2 ** depth):
            out.append((ZERO, Fraction(1, 2 ** depth)))
        return ArcSet(out)

    def preimage_set(self, s):
        if s.is_empty() or s.is_full():
            return s
        depth = self._tail_depth_bottom(s)
        out = []
        for k in range(1, depth + 1):
            lo, hi = Fraction(1, 2 ** k), Fraction(2, 2 ** k)
            shift = 1 - Fraction(3, 2 ** k)
            out.extend((a + shift, b + shift) for a, b in s.clip(lo, hi))
        if s.pieces[0][0] == 0 and s.pieces[0][1] >= Fraction(1, 2 ** depth):
            out.append((1 - Fraction(1, 2 ** depth), ONE))
        return ArcSet(out)

    def to_json(self):
        return {"odometer": {}}


@dataclass(frozen=True)
class IET(CircleMap):
    """Interval exchange: interval i (1-based) is moved to output slot ``perm[i-1]``."""

    lengths: tuple
    perm: tuple
    name = "iet"

    def __post_init__(self):
        lengths = tuple(frac(v) for v in self.lengths)
        perm = tuple(int(p) for p in self.perm)
        if len(lengths) != len(perm) or not lengths:
            raise ValueError("IET needs equally many lengths and permutation entries")
        if any(v <= 0 for v in lengths) or sum(lengths) != 1:
            raise ValueError("IET lengths must be positive and sum exactly to 1")
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError("IET permutation must be a bijection on 1..m")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "perm", perm)

    @property
    def _in_starts(self):
        return [ZERO] + list(accumulate(self.lengths))[:-1]

    @property
    def _out_starts(self):
        order = sorted(range(len(self.perm)), key=lambda i: self.perm[i])
        starts = [ZERO] * len(self.perm)
        cursor = ZERO
        for i in order:
            starts[i] = cursor
            cursor += self.lengths[i]
        return starts

    def apply(self, x):
        x = point(x)
        ins = self._in_starts
        i = bisect_right(ins, x) - 1
        return x + self._out_starts[i] - ins[i]

    def inverse_apply(self, x):
        y = point(x)
        outs = self._out_starts
        order = sorted(range(len(outs)), key=lambda i: outs[i])
        i = order[bisect_right([outs[j] for j in order], y) - 1]
        return y - outs[i] + self._in_starts[i]

    def _move(self, s, src, dst):
        out = []
        for i, length in enumerate(self.lengths):
            shift = dst[i] - src[i]
            out.extend((a + shift, b + shift) for a, b in s.clip(src[i], src[i] + length))
        return ArcSet(out)

    def image_set(self, s):
        return self._move(s, self._in_starts, self._out_starts)

    def preimage_set(self, s):
        return self._move(s, self._out_starts, self._in_starts)

    def to_json(self):
        return {"iet": {"lengths": [f"{v.numerator}/{v.denominator}" for v in self.lengths],
                        "perm": list(self.perm)}}


def map_from_json(data: dict) -> CircleMap:
    if not isinstance(data, dict) or len(data) != 1:
        raise ValueError(f"map spec must be a single-key object, got {data!r}")
    (tag, body), = data.items()
    body = body or {}
    if tag == "rotation":
        if "quotients" in body:
            return Rotation.from_quotients(body["quotients"])
        family = body.get("family")
        if family == "golden":
            return Rotation.from_quotients(golden_quotients(int(body.get("depth", 40))))
        if family == "liouville":
            return Rotation.from_quotients(liouville_quotients(int(body.get("depth", 8))))
        raise ValueError("rotation needs 'quotients' or a known 'family'")
    if tag == "doubling":
        return Doubling()
    if tag == "odometer":
        return Odometer()
    if tag == "iet":
        return IET(tuple(body["lengths"]), tuple(body["perm"]))
    raise ValueError(f"unknown map variant {tag!r}")


# functional surface ---------------------------------------------------------


def apply(m: CircleMap, x) -> Fraction:
    return m.apply(point(x))


def inverse_apply(m: CircleMap, x) -> Fraction:
    return m.inverse_apply(point(x))


def orbit(m: CircleMap, x, n: int) -> Iterator[Fraction]:
    return m.orbit(x, n)


def preimage_set(m: CircleMap, s: ArcSet) -> ArcSet:
    return m.preimage_set(s)


def image_set(m: CircleMap, s: ArcSet) -> ArcSet:
    return m.image_set(s)


def iterate_preimage(m: CircleMap, s: ArcSet, n: int) -> ArcSet:
    for _ in range(n):
        s = m.preimage_set(s)
    return s


def iterate_image(m: CircleMap, s: ArcSet, n: int) -> ArcSet:
    for _ in range(n):
        s = m.image_set(s)
    return s


# ---------------------------------------------------------------------------
# Rokhlin towers of the odometer


@dataclass(frozen=True)
class Tower:
    exponent: int
    levels: tuple

    @property
    def height(self) -> int:
        return 2 ** self.exponent

    @property
    def base(self) -> Arc:
        return Arc(ZERO, Fraction(1, self.height))


def odometer_tower(k: int) -> Tower:
    """Levels tau^i [0, 2^-K), i < 2^K, computed by iterating the exact set image."""
    if k < 1:
        raise ValueError("tower exponent must be >= 1")
    odo = Odometer()
    level = ArcSet.interval(0, Fraction(1, 2 ** k))
    levels = [level]
    for _ in range(2 ** k - 1):
        level = odo.image_set(level)
        levels.append(level)
    return Tower(k, tuple(lv.arcs[0] for lv in levels))
