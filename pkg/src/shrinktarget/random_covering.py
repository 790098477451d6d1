"""Random arcs on the circle: Monte Carlo coverage and the Shepp series.

Arc n has length l_n and a center drawn uniformly from the grid k / 2^64.
Centers come from ``PCG64(seed).random_raw``, so the first N centers of a
seed do not depend on how many are drawn, and different length families
driven by the same seed see the same centers.

Coverage is decided exactly.  A float sweep settles every trial whose
smallest overlap or largest gap exceeds ``FLOAT_MARGIN``; any trial closer
to the boundary is replayed in integer fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .arcs import format_rational, frac
from .rates import RateSeq

CENTER_BITS = 64
FLOAT_MARGIN = 1e-9
Z95 = 1.959963984540054
SHEPP_DPS = 40


@dataclass(frozen=True)
class LengthFamily:
    """Arc lengths l_n: ``"c/n"`` (capped at 1), ``"log n/n"`` or an explicit ``"table"``."""

    family: str
    c: Fraction = Fraction(1)
    table: tuple = ()

    def __post_init__(self):
        if self.family not in ("c/n", "log n/n", "table"):
            raise ValueError(f"unknown length family {self.family!r}")
        object.__setattr__(self, "c", frac(self.c))
        object.__setattr__(self, "table", tuple(frac(v) for v in self.table))
        if self.c <= 0:
            raise ValueError("c must be positive")
        if any(not 0 <= v <= 1 for v in self.table):
            raise ValueError("table lengths must lie in [0, 1]")

    @classmethod
    def c_over_n(cls, c=1):
        return cls("c/n", c=c)

    @classmethod
    def log_n_over_n(cls):
        return cls("log n/n")

    @classmethod
    def from_table(cls, values):
        return cls("table", table=tuple(values))

    def length(self, n: int) -> Fraction:
        if self.family == "c/n":
            return min(self.c / n, Fraction(1))
        if self.family == "log n/n":
            return RateSeq.log_n_over_n()(n)
        if n > len(self.table):
            raise ValueError(f"length table has {len(self.table)} terms, asked for n = {n}")
        return self.table[n - 1]

    def lengths(self, n_max: int) -> list:
        return [self.length(n) for n in range(1, n_max + 1)]

    def to_json(self) -> dict:
        out = {"family": self.family}
        if self.family == "c/n":
            out["c"] = format_rational(self.c)
        if self.family == "table":
            out["table"] = [format_rational(v) for v in self.table]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LengthFamily":
        return cls(data["family"], c=data.get("c", 1), table=tuple(data.get("table", ())))


def draw_centers(seed: int, n: int) -> np.ndarray:
    """n integers k with centers k / 2^64; prefix-stable in n."""
    return np.random.Generator(np.random.PCG64(seed)).bit_generator.random_raw(n)


def _float_verdict(centers: np.ndarray, lengths: np.ndarray):
    """True / False when the float sweep is conclusive, None otherwise."""
    starts = (centers.astype(np.float64) / 2.0 ** CENTER_BITS - lengths / 2) % 1.0
    # cut the circle at the start of arc 0
    rel = (starts - starts[0]) % 1.0
    rel[0] = 0.0
    ends = rel + lengths
    others = rel[1:]
    if len(others) and (np.min(others) < FLOAT_MARGIN or np.max(others) > 1 - FLOAT_MARGIN):
        return None
    wrapped = ends[1:][ends[1:] > 1.0] - 1.0
    reach0 = max(lengths[0], wrapped.max() if len(wrapped) else 0.0)
    order = np.argsort(others, kind="stable")
    s, e = others[order], ends[1:][order]
    before = np.maximum.accumulate(np.concatenate(([reach0], e)))
    gaps = np.concatenate((s - before[:-1], [1.0 - before[-1]]))
    worst = gaps.max()
    if worst > FLOAT_MARGIN:
        return False
    if worst < -FLOAT_MARGIN:
        return True
    return None


def _exact_verdict(centers: np.ndarray, lengths: list) -> bool:
    """Union measure 1, decided on integer keys that preserve the order of all endpoints."""
    qmax = max(v.denominator for v in lengths)
    shift = CENTER_BITS + 2 * qmax.bit_length() + 4
    unit = 1 << shift
    pieces = []
    for k, l in zip(centers.tolist(), lengths):
        if l == 0:
            continue
        a = (Fraction(int(k), 1 << CENTER_BITS) - l / 2) % 1
        b = a + l
        lo = a.numerator * unit // a.denominator
        hi = b.numerator * unit // b.denominator
        if hi <= unit:
            pieces.append((lo, hi))
        else:
            pieces.append((lo, unit))
            pieces.append((0, hi - unit))
    pieces.sort()
    reach = 0
    for lo, hi in pieces:
        if lo > reach:
            return False
        reach = max(reach, hi)
    return reach >= unit


def decided_by_lengths(exact) -> bool | None:
    """True if some arc is the whole circle, False if the total length is below 1, else None."""
    if any(v >= 1 for v in exact):
        return True
    total = Fraction(0)
    for v in exact:
        total += v
        if total >= 1:
            return None
    return False


def sample_cover(seed: int, lengths: LengthFamily, n_max: int, _cache: dict | None = None) -> bool:
    """Whether N random arcs of lengths l_1, ..., l_N cover the circle (union measure 1)."""
    if n_max < 1:
        raise ValueError("need N >= 1")
    if _cache is not None and "exact" in _cache:
        exact, approx, decided = _cache["exact"], _cache["float"], _cache["decided"]
    else:
        exact = lengths.lengths(n_max)
        approx = np.array([float(v) for v in exact])
        decided = decided_by_lengths(exact)
        if _cache is not None:
            _cache.update(exact=exact, float=approx, decided=decided)
    if decided is not None:
        return decided
    centers = draw_centers(seed, n_max)
    verdict = _float_verdict(centers, approx)
    if verdict is None:
        verdict = _exact_verdict(centers, exact)
    return verdict


@dataclass(frozen=True)
class CoverageEstimate:
    trials: int
    covered_count: int
    seed: int
    interval: tuple
    deterministic: bool = False

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.covered_count, self.trials)

    def to_json(self) -> dict:
        return {"trials": self.trials, "covered_count": self.covered_count,
                "estimate": format_rational(self.estimate),
                "estimate_decimal": f"{float(self.estimate):.12f}",
                "wilson_95_interval": [round(v, 12) for v in self.interval],
                "deterministic": self.deterministic, "seed": self.seed}


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple:
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    lo, hi = max(0.0, center - half), min(1.0, center + half)
    # the bounds are exactly 0 and 1 at the extremes; keep rounding from moving them
    return (0.0 if successes == 0 else lo), (1.0 if successes == trials else hi)


def trial_seeds(seed: int, trials: int) -> list:
    """Per-trial 64-bit seeds spawned from the master seed."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(cs.generate_state(1, np.uint64)[0]) for cs in children]


def coverage_probability(seed: int, lengths: LengthFamily, n_max: int, trials: int) -> CoverageEstimate:
    """Fraction of trials whose first N arcs cover the circle, with a Wilson 95% interval.

    When coverage is decided by the lengths alone (some l_n = 1, or total
    length below 1) the interval collapses to the exact value.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if n_max < 1:
        raise ValueError("need N >= 1")
    cache = {}
    covered = sum(sample_cover(s, lengths, n_max, cache) for s in trial_seeds(seed, trials))
    if cache["decided"] is not None:
        p = float(Fraction(covered, trials))
        return CoverageEstimate(trials, covered, seed, (p, p), deterministic=True)
    return CoverageEstimate(trials, covered, seed, wilson_interval(covered, trials))


def shepp_partial_sums(lengths: LengthFamily, n_max: int, dps: int = SHEPP_DPS) -> list:
    """Partial sums of exp(l_1 + ... + l_n) / n^2 as mpmath floats at ``dps`` digits."""
    if n_max < 1:
        raise ValueError("need N >= 1")
    out = []
    with mpmath.workdps(dps):
        s, total = mpmath.mpf(0), mpmath.mpf(0)
        for n, l in enumerate(lengths.lengths(n_max), start=1):
            s += mpmath.mpf(l.numerator) / l.denominator
            total += mpmath.exp(s) / (n * n)
            out.append(+total)
    return out


def classify_lengths(lengths: LengthFamily) -> str:
    """'diverges', 'converges' or 'unknown' for the Shepp series of the family."""
    if lengths.family == "c/n":
        # exp(c H_n) / n^2 ~ n^(c - 2)
        return "diverges" if lengths.c >= 1 else "converges"
    if lengths.family == "log n/n":
        return "diverges"
    return "unknown"
