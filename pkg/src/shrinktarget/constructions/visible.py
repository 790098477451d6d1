"""Visible shrinking targets for the doubling map via disjoint binary digit windows.

For B_n = [0, 2^-m) the event tau^n(x) in B_n says that binary digits
n+1, ..., n+m of x vanish.  Events on disjoint digit windows are exactly
independent, so a block of indices with pairwise disjoint windows misses
with probability prod (1 - m(B_n)) <= exp(-sum m(B_n)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..arcs import ArcSet, format_rational
from ..maps import Doubling
from ..rates import RateSeq, dyadic_exponent_of, exp_neg_upper_bound
from ..targets import tail_preimage_union

DEFAULT_MAX_INDEX = 2 ** 20
EXACT_MISS_LIMIT = 14


class BlockSumError(ValueError):
    """The scan horizon ran out before a block reached its required sum."""


@dataclass(frozen=True)
class WindowIndex:
    n: int
    m: int

    @property
    def window(self) -> tuple:
        return self.n + 1, self.n + self.m

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 2 ** self.m)

    @property
    def target(self) -> ArcSet:
        return ArcSet.interval(0, self.measure)


@dataclass
class VisibleBlock:
    j: int
    indices: list = field(default_factory=list)

    @property
    def total(self) -> Fraction:
        return sum((ix.measure for ix in self.indices), Fraction(0))

    @property
    def product(self) -> Fraction:
        p = Fraction(1)
        for ix in self.indices:
            p *= 1 - ix.measure
        return p

    @property
    def bound(self) -> Fraction:
        return exp_neg_upper_bound(self.j)

    def windows_disjoint(self) -> bool:
        spans = sorted(ix.window for ix in self.indices if ix.m > 0)
        return all(a[1] < b[0] for a, b in zip(spans, spans[1:]))

    @property
    def ok(self) -> bool:
        return self.windows_disjoint() and self.total >= self.j and self.product <= self.bound


@dataclass
class VisibleTargetCert:
    rates: RateSeq
    blocks: list
    exponents: list            # m_n for n = 1 .. scanned
    exact_misses: dict = field(default_factory=dict)

    @property
    def scanned(self) -> int:
        return len(self.exponents)

    def measure(self, n: int) -> Fraction:
        return Fraction(1, 2 ** self.exponents[n - 1])

    def target_table(self) -> list:
        return [ArcSet.interval(0, self.measure(n)) for n in range(1, self.scanned + 1)]

    @property
    def nested(self) -> bool:
        return all(a <= b for a, b in zip(self.exponents, self.exponents[1:]))

    def bracket_ok(self) -> bool:
        """eps_n / 2 < m(B_n) <= eps_n over the scanned range."""
        for n in range(1, self.scanned + 1):
            eps, mb = self.rates(n), self.measure(n)
            if not (eps / 2 < mb <= eps or (eps >= 1 and mb == 1)):
                return False
        return True

    @property
    def passes(self) -> bool:
        misses_ok = all(v == self.blocks[j - 1].product for j, v in self.exact_misses.items())
        return self.nested and all(b.ok for b in self.blocks) and misses_ok

    def first_failure(self):
        for b in self.blocks:
            if not b.windows_disjoint():
                return f"block {b.j}: digit windows overlap"
            if b.total < b.j:
                return f"block {b.j}: sum {b.total} < {b.j}"
            if b.product > b.bound:
                return f"block {b.j}: product {b.product} exceeds the e^-j bound"
            if b.j in self.exact_misses and self.exact_misses[b.j] != b.product:
                return f"block {b.j}: exact miss measure {self.exact_misses[b.j]} != product"
        if not self.nested:
            return "targets are not nested"
        return None

    def to_json(self) -> dict:
        return {
            "kind": "visible_target", "rates": self.rates.to_json(), "scanned": self.scanned,
            "exponents": list(self.exponents), "nested": self.nested, "passes": self.passes,
            "blocks": [{
                "j": b.j,
                "indices": [{"n": ix.n, "m": ix.m, "window": list(ix.window),
                             "measure": format_rational(ix.measure)} for ix in b.indices],
                "sum": format_rational(b.total), "product": format_rational(b.product),
                "bound": format_rational(b.bound),
                "exact_miss": (format_rational(self.exact_misses[b.j])
                               if b.j in self.exact_misses else None),
                "ok": b.ok,
            } for b in self.blocks],
        }


def block_miss_measure(indices) -> Fraction:
    """m(intersection of the complements of tau^-n(B_n)) computed directly from set preimages."""
    top = max(ix.n for ix in indices)
    chosen = {ix.n: ix.target for ix in indices}
    table = [chosen.get(n, ArcSet.empty()) for n in range(1, top + 1)]
    lo = min(chosen)
    _, hit = tail_preimage_union(Doubling(), table, lo, top)
    return 1 - hit


def visible_target_dyadic(rates: RateSeq, blocks: int, max_index: int = DEFAULT_MAX_INDEX,
                          exact_limit: int = EXACT_MISS_LIMIT) -> VisibleTargetCert:
    """Greedy blocks I_1, I_2, ... of indices with disjoint digit windows and sum m(B_n) >= j."""
    if blocks < 1:
        raise ValueError("need at least one block")
    if rates.diverges() is False:
        raise BlockSumError(f"sum of eps_n converges for {rates.to_json()}; blocks cannot close")
    exps = []
    done = []
    current = VisibleBlock(1)
    total = Fraction(0)
    last_end = 0
    n = 0
    while len(done) < blocks:
        n += 1
        if n > max_index:
            raise BlockSumError(
                f"block {current.j} reached sum {float(total):.6f} < {current.j} "
                f"with {len(current.indices)} admitted indices after scanning n <= {max_index}")
        m = dyadic_exponent_of(rates(n))
        exps.append(m)
        if n > last_end:
            ix = WindowIndex(n, m)
            current.indices.append(ix)
            total += ix.measure
            last_end = max(last_end, n + m)
            if total >= current.j:
                done.append(current)
                current = VisibleBlock(current.j + 1)
                total = Fraction(0)
                last_end = n + m
    cert = VisibleTargetCert(rates, done, exps)
    for b in done:
        if max(ix.n for ix in b.indices) <= exact_limit:
            cert.exact_misses[b.j] = block_miss_measure(b.indices)
    return cert


def hits_in_block(x: Fraction, block: VisibleBlock) -> bool:
    """Whether the doubling orbit of a dyadic x enters B_n at some n in the block."""
    bits = x.denominator.bit_length() - 1
    if x.denominator != 1 << bits:
        raise ValueError("sample points must be dyadic rationals")
    # a dyadic x has only zero digits past its last one, so pad to the widest window
    need = max(ix.n + ix.m for ix in block.indices)
    k = x.numerator
    if bits < need:
        k, bits = k << (need - bits), need
    for ix in block.indices:
        # digits n+1 .. n+m of x are zero
        if (k >> (bits - ix.n - ix.m)) & ((1 << ix.m) - 1) == 0:
            return True
    return False


def block_visibility(cert: VisibleTargetCert, sample) -> Fraction:
    """Fraction of sample points hitting the target in every certified block."""
    sample = list(sample)
    if not sample:
        raise ValueError("empty sample")
    good = sum(all(hits_in_block(x, b) for b in cert.blocks) for x in sample)
    return Fraction(good, len(sample))


def required_bits(cert: VisibleTargetCert) -> int:
    return max(ix.n + ix.m for b in cert.blocks for ix in b.indices)
