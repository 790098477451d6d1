"""A large set E whose forward sweeps stay short of the whole circle.

Given seeds E_1, E_2, ... with sum n m(E_n) <= eps, the set
E = X minus the union of tau^k(E_n) over 1 <= k <= n has m(E) >= 1 - eps.
Points of E_n never land in E during their first n steps, so E_n is left
uncovered by tau^-1 E ∪ ... ∪ tau^-n E.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..arcs import ArcSet, format_rational, frac, union_all
from ..maps import CircleMap, NotInvertibleError


class BudgetError(ValueError):
    """The seeds are too heavy for the requested epsilon."""


@dataclass
class SmallSweepRow:
    n: int
    forward: Fraction       # m(tau^1 E ∪ ... ∪ tau^n E)
    backward: Fraction      # m(tau^-1 E ∪ ... ∪ tau^-n E)
    witness: Fraction       # m(E_n)
    witness_uncovered: bool

    @property
    def ok(self) -> bool:
        return self.witness_uncovered and self.forward == self.backward and self.forward <= 1 - self.witness


@dataclass
class SmallSweepCert:
    E: ArcSet
    epsilon: Fraction
    budget: Fraction
    rows: list
    seeds: list
    tau: CircleMap

    @property
    def measure(self) -> Fraction:
        return self.E.measure()

    @property
    def passes(self) -> bool:
        return self.budget <= self.epsilon and self.measure >= 1 - self.epsilon and all(r.ok for r in self.rows)

    def first_failure(self):
        if self.budget > self.epsilon:
            return f"budget {self.budget} exceeds epsilon {self.epsilon}"
        if self.measure < 1 - self.epsilon:
            return f"measure(E) = {self.measure} < 1 - epsilon"
        return next((f"row n={r.n}: seed E_n is not left uncovered" for r in self.rows if not r.ok), None)

    def to_json(self) -> dict:
        return {"kind": "small_sweep", "epsilon": format_rational(self.epsilon),
                "budget": format_rational(self.budget), "measure": format_rational(self.measure),
                "passes": self.passes, "map": self.tau.to_json(),
                "seeds": [seed.to_json() for seed in self.seeds], "E": self.E.to_json(),
                "rows": [{"n": r.n, "forward": format_rational(r.forward),
                          "backward": format_rational(r.backward), "witness": format_rational(r.witness),
                          "witness_uncovered": r.witness_uncovered, "ok": r.ok} for r in self.rows]}


def sweep_budget(seeds) -> Fraction:
    return sum((n * s.measure() for n, s in enumerate(seeds, start=1)), Fraction(0))


def generic_small_sweep(seeds, tau: CircleMap, epsilon) -> SmallSweepCert:
    """Build E from seeds E_1, ..., E_L (index n = position + 1) on an invertible map."""
    epsilon = frac(epsilon)
    seeds = list(seeds)
    if not tau.invertible:
        raise NotInvertibleError("the sweep construction needs forward images")
    budget = sweep_budget(seeds)
    if budget > epsilon:
        raise BudgetError(f"sum n*m(E_n) = {budget} exceeds epsilon = {epsilon}")
    swept = []
    for n, seed in enumerate(seeds, start=1):
        img = seed
        for _ in range(n):
            img = tau.image_set(img)
            swept.append(img)
    e = union_all(swept).complement()
    rows = []
    fwd, bwd = e, e
    fwd_union, bwd_union = ArcSet.empty(), ArcSet.empty()
    for n, seed in enumerate(seeds, start=1):
        fwd, bwd = tau.image_set(fwd), tau.preimage_set(bwd)
        fwd_union, bwd_union = fwd_union | fwd, bwd_union | bwd
        rows.append(SmallSweepRow(n, fwd_union.measure(), bwd_union.measure(), seed.measure(),
                                  seed.isdisjoint(bwd_union)))
    return SmallSweepCert(e, epsilon, budget, rows, seeds, tau)
