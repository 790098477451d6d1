"""Covering radius r_n(x): the least r such that closed balls of radius r at the
first n orbit points cover the circle.  It is half the largest circular gap.
"""
from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .arcs import circular_gaps, format_rational, point
from .maps import CircleMap, Rotation


def covering_radius(points) -> Fraction:
    return max(circular_gaps(points)) / 2


class GapTracker:
    """Sorted points on a circle of circumference ``unit`` with a multiset of gaps.

    Each insertion splits one gap, so the maximum gap never increases; it is
    kept in a max-heap with lazy deletion.
    """

    def __init__(self, unit=1):
        self.unit = unit
        self.points = []
        self.counts = {}
        self._heap = []
        self.repeats = 0

    def _add_gap(self, g):
        self.counts[g] = self.counts.get(g, 0) + 1
        heapq.heappush(self._heap, -g)

    def _drop_gap(self, g):
        c = self.counts[g] - 1
        if c:
            self.counts[g] = c
        else:
            del self.counts[g]

    def insert(self, y) -> bool:
        pts = self.points
        i = bisect_left(pts, y)
        if i < len(pts) and pts[i] == y:
            self.repeats += 1
            return False
        if not pts:
            pts.append(y)
            self._add_gap(self.unit)
            return True
        left = pts[i - 1] if i > 0 else pts[-1] - self.unit
        right = pts[i] if i < len(pts) else pts[0] + self.unit
        self._drop_gap(right - left)
        self._add_gap(y - left)
        self._add_gap(right - y)
        pts.insert(i, y)
        return True

    @property
    def max_gap(self):
        heap = self._heap
        while -heap[0] not in self.counts:
            heapq.heappop(heap)
        return -heap[0]

    @property
    def distinct_gaps(self) -> int:
        return len(self.counts)


@dataclass
class CoverProfile:
    values: list
    periodic: bool = False
    distinct_gaps: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.values)

    @property
    def scaled(self) -> list:
        return [n * r for n, r in enumerate(self.values, start=1)]

    def sup_scaled_from(self, n_min: int = 1):
        best, arg = None, None
        for n in range(n_min, self.horizon + 1):
            v = n * self.values[n - 1]
            if best is None or v > best:
                best, arg = v, n
        return best, arg

    @property
    def sup_scaled(self) -> Fraction:
        return self.sup_scaled_from(1)[0]

    @property
    def argmax(self) -> int:
        return self.sup_scaled_from(1)[1]


def _integer_rotation_orbit(tau: Rotation, x: Fraction, n: int):
    """Orbit numerators over a common denominator D, avoiding Fraction overhead."""
    theta = tau.theta
    d = lcm(theta.denominator, x.denominator)
    step = theta.numerator * (d // theta.denominator)
    y = x.numerator * (d // x.denominator)
    out = []
    for _ in range(n):
        y = (y + step) % d
        out.append(y)
    return d, out


def covering_profile(tau: CircleMap, x, n_max: int) -> CoverProfile:
    """r_1, ..., r_N for the orbit tau^1 x, ..., tau^N x, computed incrementally."""
    if n_max < 1:
        raise ValueError("horizon must be >= 1")
    x = point(x)
    if isinstance(tau, Rotation):
        unit, orbit_pts = _integer_rotation_orbit(tau, x, n_max)
    else:
        unit, orbit_pts = 1, tau.orbit(x, n_max)
    tracker = GapTracker(unit)
    values, kinds = [], []
    two_unit = 2 * unit
    for y in orbit_pts:
        tracker.insert(y)
        values.append(Fraction(tracker.max_gap, two_unit) if unit != 1 else tracker.max_gap / 2)
        kinds.append(tracker.distinct_gaps)
    return CoverProfile(values, periodic=tracker.repeats > 0, distinct_gaps=kinds)


def rate_report(profile: CoverProfile, n_min: int = 1) -> dict:
    """Exact sup of n * r_n over n >= n_min plus a table at dyadic checkpoints."""
    if not 1 <= n_min <= profile.horizon:
        raise ValueError("n_min must lie in 1..N")
    sup, arg = profile.sup_scaled_from(n_min)
    checkpoints = []
    n = 1
    while n <= profile.horizon:
        if n >= n_min:
            checkpoints.append(n)
        n *= 2
    if profile.horizon not in checkpoints:
        checkpoints.append(profile.horizon)
    rows = []
    for n in checkpoints:
        r = profile.values[n - 1]
        rows.append({"n": n, "r_n": format_rational(r), "n_r_n": format_rational(n * r),
                     "n_r_n_decimal": f"{float(n * r):.12f}"})
    return {"n_min": n_min, "N": profile.horizon, "sup_scaled": format_rational(sup),
            "sup_scaled_decimal": f"{float(sup):.12f}", "argmax": arg,
            "periodic": profile.periodic, "checkpoints": rows}
