"""Almost-invariant sets, slowly sweeping sets and a.e. invisible targets on the odometer.

Sets are unions of odometer tower levels.  In tower coordinates (see
``shrinktarget.cells``) the odometer is the shift r -> r + 1 on Z/2^K, so

* a union of the lowest L levels of the height-2^K tower is the run [0, L);
* ``U_M = tau^1 E ∪ ... ∪ tau^M E`` misses exactly the points r whose M
  predecessors r-1, ..., r-M all avoid E.  A gap of g consecutive non-E
  cells therefore leaves max(0, g - M + 1) cells uncovered.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import cells
from ..arcs import ArcSet, format_rational
from ..rates import RateSeq, largest_power_of_two_at_most


class InfeasibleScheduleError(ValueError):
    """The gamma schedule cannot be realized for these rates."""


# ---------------------------------------------------------------------------
# almost-invariant sets


def tower_exponent(n: int, delta: Fraction, epsilon: Fraction) -> int:
    """Smallest K with n / 2^K <= epsilon * delta and delta * 2^K an integer."""
    k = 1
    while n > epsilon * delta * 2 ** k:
        k += 1
    return max(k, cells.dyadic_exponent(delta))


@dataclass
class AlmostInvariantCert:
    A: ArcSet
    delta: Fraction
    epsilon: Fraction
    n: int
    K: int
    intersection_measure: Fraction

    @property
    def levels(self) -> int:
        return int(self.delta * 2 ** self.K)

    @property
    def passes(self) -> bool:
        return (self.A.measure() == self.delta
                and self.intersection_measure >= (1 - self.epsilon) * self.delta)

    def first_failure(self):
        if self.A.measure() != self.delta:
            return f"measure(A) = {self.A.measure()} != delta = {self.delta}"
        if not self.passes:
            return f"intersection {self.intersection_measure} < (1 - epsilon) delta"
        return None

    def to_json(self) -> dict:
        return {"kind": "almost_invariant", "n": self.n, "delta": format_rational(self.delta),
                "epsilon": format_rational(self.epsilon), "K": self.K,
                "intersection_measure": format_rational(self.intersection_measure),
                "passes": self.passes, "A": self.A.to_json()}


def level_intersection(k: int, levels: int, n: int) -> Fraction:
    """m(A ∩ tau A ∩ ... ∩ tau^n A) for A the lowest ``levels`` levels of the 2^k tower."""
    size = 2 ** k
    return Fraction(cells.shifted_run_intersection(size, 0, levels, range(n + 1)), size)


def almost_invariant_set(n: int, delta, epsilon) -> AlmostInvariantCert:
    """A set of measure delta with m(tau A ∩ ... ∩ tau^n A ∩ A) >= (1 - epsilon) delta."""
    delta, epsilon = Fraction(delta), Fraction(epsilon)
    if n < 1 or not 0 < delta < 1 or not 0 < epsilon < 1:
        raise ValueError("need n >= 1, 0 < delta < 1, 0 < epsilon < 1")
    cells.dyadic_exponent(delta)
    k = tower_exponent(n, delta, epsilon)
    cells.check_resolution(k)
    levels = int(delta * 2 ** k)
    a = cells.arcset_from_tower(cells.tower_levels(k, 0, levels))
    return AlmostInvariantCert(a, delta, epsilon, n, k, level_intersection(k, levels, n))


# ---------------------------------------------------------------------------
# the gamma / N_j schedule


@dataclass
class SweepSchedule:
    rates: RateSeq
    horizon: int
    gammas: list = field(default_factory=list)
    starts: list = field(default_factory=list)      # N_j, with N_1 = 1
    lengths: list = field(default_factory=list)     # n_j = N_{j+1}, or N for the last block
    exponents: list = field(default_factory=list)   # K_j
    c: Fraction = Fraction(1, 2)

    @property
    def blocks(self) -> int:
        return len(self.gammas)

    @property
    def resolution(self) -> int:
        return max(self.exponents)

    def block_of(self, m: int) -> int:
        """0-based block index j with N_j <= M < N_{j+1}."""
        j = 0
        while j + 1 < len(self.starts) and self.starts[j + 1] <= m:
            j += 1
        return j

    def to_json(self) -> dict:
        return {"c": format_rational(self.c),
                "blocks": [{"j": j + 1, "gamma": format_rational(g), "N_j": s, "n_j": n, "K_j": k}
                           for j, (g, s, n, k) in enumerate(zip(self.gammas, self.starts,
                                                                 self.lengths, self.exponents))]}


def _dyadic_ceiling_below_one(x: Fraction) -> Fraction:
    for t in range(1, 61):
        g = Fraction(-((-x.numerator * 2 ** t) // x.denominator), 2 ** t)
        if g < 1:
            return g
    raise InfeasibleScheduleError(f"2*eps_1 = {x} is too close to 1 for a dyadic gamma_1")


def sweep_schedule(rates: RateSeq, horizon: int, c=Fraction(1, 2)) -> SweepSchedule:
    """gamma_1 >= 2 eps_1, gamma_j = floor_2((1 - gamma_1) c 2^-j); N_j least with 2 eps_{N_j} <= gamma_j."""
    c = Fraction(c)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 < c < 1:
        raise ValueError("schedule constant c must lie in (0, 1)")
    eps = rates.values(horizon)
    rates.validate(horizon)
    if eps[0] >= Fraction(1, 2):
        raise InfeasibleScheduleError(f"need eps_n < 1/2, got eps_1 = {eps[0]}")
    sched = SweepSchedule(rates, horizon, c=c)
    g1 = _dyadic_ceiling_below_one(2 * eps[0])
    sched.gammas.append(g1)
    sched.starts.append(1)
    j, n = 2, 2
    while True:
        gamma = largest_power_of_two_at_most((1 - g1) * c / 2 ** j)
        while n <= horizon and 2 * eps[n - 1] > gamma:
            n += 1
        if n > horizon:
            break
        sched.gammas.append(gamma)
        sched.starts.append(n)
        n += 1
        j += 1
    sched.lengths = sched.starts[1:] + [horizon]
    sched.exponents = [tower_exponent(nj, g, Fraction(1, 2))
                       for nj, g in zip(sched.lengths, sched.gammas)]
    cells.check_resolution(sched.resolution)
    return sched


# ---------------------------------------------------------------------------
# cell-level engine


def uncovered_counts(e_mask: np.ndarray, ms) -> list:
    """For each M: number of cells outside tau^1 E ∪ ... ∪ tau^M E (E given in tower coordinates)."""
    size = e_mask.size
    if not e_mask.any():
        return [size for _ in ms]
    _, gaps = cells.cyclic_runs(~e_mask)
    gaps = np.sort(gaps)
    suffix = np.concatenate((np.cumsum(gaps[::-1])[::-1], [0]))
    out = []
    for m in ms:
        i = int(np.searchsorted(gaps, m, side="left"))
        count = len(gaps) - i
        out.append(int(suffix[i]) - (m - 1) * count)
    return out


def uncovered_mask(e_mask: np.ndarray, m: int) -> np.ndarray:
    """Tower-coordinate mask of X minus (tau^1 E ∪ ... ∪ tau^M E)."""
    size = e_mask.size
    if not e_mask.any():
        return np.ones(size, dtype=bool)
    starts, gaps = cells.cyclic_runs(~e_mask)
    keep = gaps >= m
    lo = (starts[keep] + m) % size
    length = gaps[keep] - m + 1
    diff = np.zeros(size + 1, dtype=np.int32)
    hi = lo + length
    wrap = hi > size
    np.add.at(diff, lo, 1)
    np.add.at(diff, np.minimum(hi, size), -1)
    np.add.at(diff, np.zeros(int(wrap.sum()), dtype=np.int64), 1)
    np.add.at(diff, hi[wrap] - size, -1)
    return np.cumsum(diff[:-1]) > 0


class SweepEngine:
    """Tower-level masks of the sets A_j for a schedule, at the common resolution."""

    def __init__(self, sched: SweepSchedule):
        self.sched = sched
        self.K = sched.resolution
        self.size = 2 ** self.K
        self.levels = [int(g * 2 ** k) for g, k in zip(sched.gammas, sched.exponents)]

    def a_mask(self, j: int) -> np.ndarray:
        return cells.tower_levels(self.sched.exponents[j], 0, self.levels[j], self.K)

    def a_arcset(self, j: int) -> ArcSet:
        k = self.sched.exponents[j]
        return cells.arcset_from_tower(cells.tower_levels(k, 0, self.levels[j]))

    def a_intersection(self, j: int) -> Fraction:
        return level_intersection(self.sched.exponents[j], self.levels[j], self.sched.lengths[j])

    def suffix_complements(self):
        """Yield (j, E_j mask) for j = J-1 .. 0 where E_j = X minus (A_j ∪ ... ∪ A_J)."""
        union = np.zeros(self.size, dtype=bool)
        for j in range(self.sched.blocks - 1, -1, -1):
            union |= self.a_mask(j)
            yield j, ~union


# ---------------------------------------------------------------------------
# slowly sweeping sets


@dataclass
class SweepCert:
    schedule: SweepSchedule
    E: ArcSet
    measure_E: Fraction
    rows: list                     # (M, m(tau^1 E ∪ ... ∪ tau^M E), 1 - eps_M)
    A_sets: list
    a_intersections: list

    @property
    def horizon(self) -> int:
        return self.schedule.horizon

    @property
    def passes(self) -> bool:
        return self.measure_E > 0 and all(m <= b for _, m, b in self.rows)

    def first_failure(self):
        if self.measure_E <= 0:
            return "measure(E) is not positive"
        for row in self.rows:
            if row[1] > row[2]:
                return f"row M={row[0]}: {row[1]} > {row[2]}"
        return None

    def to_json(self) -> dict:
        s = self.schedule
        return {
            "kind": "sweep", "horizon": s.horizon, "rates": s.rates.to_json(),
            "schedule": s.to_json(), "resolution": s.resolution,
            "measure_E": format_rational(self.measure_E), "passes": self.passes,
            "A": [a.to_json() for a in self.A_sets],
            "A_intersections": [format_rational(v) for v in self.a_intersections],
            "E": self.E.to_json(),
            "rows": [{"M": m, "measure": format_rational(v), "bound": format_rational(b),
                      "ok": v <= b} for m, v, b in self.rows],
        }


def slow_sweep_complement(rates: RateSeq, horizon: int, c=Fraction(1, 2)) -> SweepCert:
    """E with m(E) > 0 and m(tau E ∪ ... ∪ tau^M E) <= 1 - eps_M for all M <= N."""
    sched = sweep_schedule(rates, horizon, c)
    eng = SweepEngine(sched)
    union = np.zeros(eng.size, dtype=bool)
    for j in range(sched.blocks):
        union |= eng.a_mask(j)
    e_mask = ~union
    ms = list(range(1, horizon + 1))
    unc = uncovered_counts(e_mask, ms)
    rows = [(m, Fraction(eng.size - u, eng.size), 1 - rates(m)) for m, u in zip(ms, unc)]
    e = cells.arcset_from_tower(e_mask)
    return SweepCert(sched, e, Fraction(int(e_mask.sum()), eng.size), rows,
                     [eng.a_arcset(j) for j in range(sched.blocks)],
                     [eng.a_intersection(j) for j in range(sched.blocks)])


# ---------------------------------------------------------------------------
# invisible targets


@dataclass
class InvisibleRow:
    M: int
    block: int
    measure_B: Fraction
    eps: Fraction
    measure_E: Fraction
    disjoint: bool
    B: ArcSet | None = None

    @property
    def ok(self) -> bool:
        return self.measure_B >= self.eps and self.disjoint


@dataclass
class InvisibleTargetCert:
    schedule: SweepSchedule
    rows: list
    E_sets: list                   # E_j per block (0-based j), when materialized
    A_sets: list
    nested: bool
    materialized: bool

    @property
    def horizon(self) -> int:
        return self.schedule.horizon

    @property
    def passes(self) -> bool:
        return self.nested and all(r.ok for r in self.rows) and all(
            a.measure_E <= b.measure_E for a, b in zip(self.rows, self.rows[1:]))

    def first_failure(self):
        for r in self.rows:
            if not r.ok:
                return f"row M={r.M}: measure(B_M) = {r.measure_B}, eps_M = {r.eps}, disjoint = {r.disjoint}"
        if not self.nested:
            return "targets B_M are not nested"
        for a, b in zip(self.rows, self.rows[1:]):
            if a.measure_E > b.measure_E:
                return f"row M={b.M}: measure(E_M) decreased"
        return None

    def target_table(self) -> list:
        if not self.materialized:
            raise ValueError("certificate was built without materialized target sets")
        return [r.B for r in self.rows]

    def E_for(self, m: int) -> ArcSet:
        if not self.materialized:
            raise ValueError("certificate was built without materialized sweep sets")
        return self.E_sets[self.rows[m - 1].block]

    def to_json(self) -> dict:
        s = self.schedule
        rows = []
        for r in self.rows:
            row = {"M": r.M, "block": r.block + 1, "measure_B": format_rational(r.measure_B),
                   "eps": format_rational(r.eps), "measure_E": format_rational(r.measure_E),
                   "disjoint": r.disjoint, "ok": r.ok}
            if r.B is not None:
                row["B"] = r.B.to_json()
            rows.append(row)
        return {"kind": "invisible_target", "horizon": s.horizon, "rates": s.rates.to_json(),
                "schedule": s.to_json(), "resolution": s.resolution, "nested": self.nested,
                "materialized": self.materialized, "passes": self.passes,
                "A": [a.to_json() for a in self.A_sets],
                "E": [e.to_json() for e in self.E_sets] if self.materialized else None,
                "rows": rows}


MATERIALIZE_LIMIT = 64


def invisible_target(rates: RateSeq, horizon: int, c=Fraction(1, 2),
                     materialize: bool | None = None) -> InvisibleTargetCert:
    """Nested B_M with m(B_M) >= eps_M and tau^k(E_M) ∩ B_M empty for k <= M.

    E_M drops the sets A_1, ..., A_{j-1} of the earlier blocks, so it grows
    with M; B_M is the complement of tau^1 E_M ∪ ... ∪ tau^M E_M.  With
    ``materialize`` the sets B_M are kept as ArcSets (default: N <= 64).
    """
    sched = sweep_schedule(rates, horizon, c)
    eng = SweepEngine(sched)
    if materialize is None:
        materialize = horizon <= MATERIALIZE_LIMIT
    rows = {}
    e_sets = [None] * sched.blocks
    nested = True
    prev_first_mask = None
    for j, e_mask in eng.suffix_complements():
        lo = sched.starts[j]
        hi = sched.starts[j + 1] - 1 if j + 1 < sched.blocks else horizon
        ms = list(range(lo, hi + 1))
        unc = uncovered_counts(e_mask, ms)
        m_e = Fraction(int(e_mask.sum()), eng.size)
        for m, u in zip(ms, unc):
            b = None
            if materialize:
                b = cells.arcset_from_tower(uncovered_mask(e_mask, m))
            rows[m] = InvisibleRow(m, j, Fraction(u, eng.size), rates(m), m_e, True, b)
        # B_{N_{j+1}} (built from E_{j+1}) must sit inside B_{N_{j+1}-1} (built from E_j)
        last_mask = uncovered_mask(e_mask, hi)
        if prev_first_mask is not None and (prev_first_mask & ~last_mask).any():
            nested = False
        prev_first_mask = uncovered_mask(e_mask, lo)
        if materialize:
            e_sets[j] = cells.arcset_from_tower(e_mask)
    ordered = [rows[m] for m in range(1, horizon + 1)]
    return InvisibleTargetCert(sched, ordered, e_sets,
                               [eng.a_arcset(j) for j in range(sched.blocks)], nested, materialize)
