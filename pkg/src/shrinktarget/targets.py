"""Targets, hit detection along orbits and tail-union certificate quantities."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .arcs import ArcSet, circle_distance, format_rational, point, union_all
from .maps import CircleMap
from .rates import HorizonError, RateSeq, partial_sum


# ---------------------------------------------------------------------------
# target sequences


class TargetSeq:
    def hit(self, n: int, y: Fraction, start: Fraction) -> bool:
        """Whether the orbit point y = tau^n(start) lies in the n-th target."""
        raise NotImplementedError

    def set_at(self, n: int, start: Fraction | None = None) -> ArcSet:
        raise NotImplementedError

    def check_horizon(self, n: int) -> None:
        pass


@dataclass(frozen=True)
class GeometricBalls(TargetSeq):
    """Closed balls B_{eps_n}(center) in the wrap-around metric."""

    center: Fraction
    radii: RateSeq

    def hit(self, n, y, start):
        return circle_distance(y, point(self.center)) <= self.radii(n)

    def set_at(self, n, start=None):
        return ArcSet.ball(point(self.center), self.radii(n))

    def check_horizon(self, n):
        self.radii(n)


@dataclass(frozen=True)
class SelfBalls(TargetSeq):
    """Balls centered at the orbit's own starting point."""

    radii: RateSeq

    def hit(self, n, y, start):
        return circle_distance(y, start) <= self.radii(n)

    def set_at(self, n, start=None):
        if start is None:
            raise ValueError("self-centered balls need the starting point")
        return ArcSet.ball(start, self.radii(n))

    def check_horizon(self, n):
        self.radii(n)


class AbstractSets(TargetSeq):
    """An explicit finite table B_1, ..., B_L of ArcSets."""

    def __init__(self, table: Sequence[ArcSet], shrinking: bool = False):
        self.table = tuple(table)
        self.shrinking = shrinking
        self.measures = tuple(b.measure() for b in self.table)
        if shrinking:
            for n in range(1, len(self.table)):
                if not self.table[n].issubset(self.table[n - 1]):
                    raise ValueError(f"target flagged shrinking but B_{n + 1} is not inside B_{n}")

    @classmethod
    def from_rule(cls, rule: Callable[[int], ArcSet], length: int, shrinking: bool = False):
        return cls([rule(n) for n in range(1, length + 1)], shrinking=shrinking)

    @classmethod
    def initial_intervals(cls, rates: RateSeq, length: int):
        """B_n = [0, eps_n) (clipped to the circle); nested when the rates are nonincreasing."""
        return cls.from_rule(lambda n: ArcSet.interval(0, min(rates(n), Fraction(1))), length)

    def check_horizon(self, n):
        if n > len(self.table):
            raise HorizonError(f"target table defines B_1..B_{len(self.table)}, asked for n = {n}")

    def hit(self, n, y, start):
        self.check_horizon(n)
        return self.table[n - 1].contains(y)

    def set_at(self, n, start=None):
        self.check_horizon(n)
        return self.table[n - 1]


@dataclass(frozen=True)
class FixedSet(TargetSeq):
    target: ArcSet

    def hit(self, n, y, start):
        return self.target.contains(y)

    def set_at(self, n, start=None):
        return self.target


@dataclass(frozen=True)
class HitRecord:
    times: tuple
    horizon: int

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def first_hit(self) -> int | None:
        return self.times[0] if self.times else None

    def to_json(self) -> dict:
        return {"horizon": self.horizon, "count": self.count, "first_hit": self.first_hit,
                "times": list(self.times)}


# ---------------------------------------------------------------------------
# operations


def hits(tau: CircleMap, x, targets: TargetSeq, n_max: int, powers: Sequence[int] | None = None) -> HitRecord:
    """Times n <= N with tau^n(x) in B_n.

    With ``powers`` the test at index n uses tau^{powers[n-1]}(x) instead of
    tau^n(x) (visibility along a subsequence).
    """
    if n_max < 1:
        raise ValueError("horizon must be >= 1")
    targets.check_horizon(n_max)
    start = point(x)
    times = []
    if powers is None:
        for n, y in enumerate(tau.orbit(start, n_max), start=1):
            if targets.hit(n, y, start):
                times.append(n)
        return HitRecord(tuple(times), n_max)
    powers = list(powers)[:n_max]
    if len(powers) < n_max or any(b <= a for a, b in zip(powers, powers[1:])) or powers[0] < 1:
        raise ValueError("powers must be an increasing list of positive integers covering the horizon")
    y, t = start, 0
    for n, m in enumerate(powers, start=1):
        while t < m:
            y = tau.apply(y)
            t += 1
        if targets.hit(n, y, start):
            times.append(n)
    return HitRecord(tuple(times), n_max)


def orbit_rows(tau: CircleMap, x, targets: TargetSeq, n_max: int):
    """(n, hit, orbit point) triples for CSV output."""
    start = point(x)
    for n, y in enumerate(tau.orbit(start, n_max), start=1):
        yield n, targets.hit(n, y, start), y


def scaled_distance_min(tau: CircleMap, x, y, n_max: int):
    """(min over n <= N of n * d(tau^n x, y), smallest n attaining it)."""
    if n_max < 1:
        raise ValueError("horizon must be >= 1")
    y = point(y)
    best, arg = None, None
    for n, z in enumerate(tau.orbit(x, n_max), start=1):
        v = n * circle_distance(z, y)
        if best is None or v < best:
            best, arg = v, n
    return best, arg


def scaled_distance_rows(tau: CircleMap, x, y, n_max: int):
    y = point(y)
    for n, z in enumerate(tau.orbit(x, n_max), start=1):
        yield n, n * circle_distance(z, y)


def tail_ball_union(tau: CircleMap, x, radii: RateSeq, n_lo: int, n_hi: int):
    """Exact union of the balls B_{eps_n}(tau^n x), N <= n <= M, and its measure."""
    if not 1 <= n_lo <= n_hi:
        raise ValueError("need 1 <= N <= M")
    balls = []
    for n, z in enumerate(tau.orbit(x, n_hi), start=1):
        if n >= n_lo:
            balls.append(ArcSet.ball(z, radii(n)))
    u = union_all(balls)
    return u, u.measure()


def tail_preimage_union(tau: CircleMap, targets: Sequence[ArcSet] | TargetSeq, n_lo: int, n_hi: int):
    """Exact union of tau^-n(B_n), N <= n <= M, by Horner-style nesting of preimages.

    ``targets`` is indexed from n = 1 (a sequence ``table[n-1]`` or a TargetSeq).
    """
    if not 1 <= n_lo <= n_hi:
        raise ValueError("need 1 <= N <= M")
    if isinstance(targets, TargetSeq):
        targets.check_horizon(n_hi)
        get = targets.set_at
    else:
        if len(targets) < n_hi:
            raise HorizonError(f"target table defines B_1..B_{len(targets)}, asked for n = {n_hi}")
        get = lambda n: targets[n - 1]
    v = get(n_hi)
    for n in range(n_hi - 1, n_lo - 1, -1):
        v = get(n).union(tau.preimage_set(v))
    for _ in range(n_lo):
        v = tau.preimage_set(v)
    return v, v.measure()


def tail_union_json(n_lo: int, n_hi: int, m: Fraction, threshold: Fraction | None = None) -> dict:
    out = {"N": n_lo, "M": n_hi, "measure": format_rational(m)}
    out["threshold_passed"] = None if threshold is None else bool(m > threshold)
    if threshold is not None:
        out["threshold"] = format_rational(threshold)
    return out


def visibility_fraction(tau: CircleMap, sample: Sequence, targets: TargetSeq, n0: int, n_max: int) -> Fraction:
    """Fraction of sample points with at least one hit at a time in [N0, N]."""
    if not sample:
        raise ValueError("empty sample")
    if not 1 <= n0 <= n_max:
        raise ValueError("need 1 <= N0 <= N")
    targets.check_horizon(n_max)
    good = 0
    for x in sample:
        start = point(x)
        for n, y in enumerate(tau.orbit(start, n_max), start=1):
            if n >= n0 and targets.hit(n, y, start):
                good += 1
                break
    return Fraction(good, len(sample))


def expected_hits(rates: RateSeq, n_max: int) -> Fraction:
    if n_max < 1:
        raise ValueError("horizon must be >= 1")
    return partial_sum(rates, n_max)
