"""Re-check serialized certificates from their ArcSets alone.

The checker shares parsing and set primitives with the builders but none of
their bookkeeping: measures come from set iterates on small instances and
from run-length arithmetic on cell bitmaps for large ones, and every stored
number is compared with the recomputed one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import cells
from ..arcs import ArcSet, frac, union_all
from ..maps import Doubling, Odometer, map_from_json
from ..rates import RateSeq, dyadic_exponent_of
from ..targets import tail_preimage_union

SET_ROUTE_LIMIT = 64


@dataclass
class VerifyResult:
    kind: str
    recomputed_pass: bool = True
    claimed_pass: bool | None = None
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.recomputed_pass and not self.failures

    @property
    def first_failure(self) -> str | None:
        return self.failures[0] if self.failures else None

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def to_json(self) -> dict:
        return {"kind": self.kind, "ok": self.ok, "recomputed_pass": self.recomputed_pass,
                "claimed_pass": self.claimed_pass, "first_failure": self.first_failure,
                "failures": self.failures[:50]}


def _expect(res: VerifyResult, where: str, name: str, claimed, actual) -> None:
    if claimed != actual:
        res.fail(f"{where}: {name} recorded as {claimed}, recomputed {actual}")


def _q(value) -> Fraction:
    return frac(value)


def _exp_neg_bound(j: int) -> Fraction:
    # e^j >= 1 + j + ... + j^T/T!, so its reciprocal bounds e^-j from above
    total, term = Fraction(0), Fraction(1)
    for k in range(80):
        total += term
        term = term * j / (k + 1)
    return 1 / total


# --- run arithmetic on tower bitmaps -----------------------------------------


def _tower_mask(s: ArcSet, k: int) -> np.ndarray:
    return cells.tower_from_arcset(s, k)


def _gap_lengths(e: np.ndarray) -> tuple:
    """(run lengths of E, gap lengths) on the cycle, computed from run boundaries."""
    if e.all():
        return np.array([e.size]), np.array([], dtype=np.int64)
    if not e.any():
        return np.array([], dtype=np.int64), np.array([e.size])
    # rotate so that position 0 starts a run of E
    first = int(np.flatnonzero(e & ~np.roll(e, 1))[0])
    r = np.roll(e, -first).astype(np.int8)
    edges = np.flatnonzero(np.diff(np.concatenate((r, [1]))))
    bounds = np.concatenate(([0], edges + 1))
    lengths = np.diff(bounds)
    return lengths[0::2], lengths[1::2]


def _covered_counts(e: np.ndarray, ms) -> list:
    """Cells in tau^1 E ∪ ... ∪ tau^M E: each E-run spills min(M, g) cells into the gap g after it,
    and reaches the next run's first cell when g < M."""
    if e.all():
        return [e.size for _ in ms]
    runs, gaps = _gap_lengths(e)
    if not len(runs):
        return [0 for _ in ms]
    gaps = np.sort(gaps)
    prefix = np.concatenate(([0], np.cumsum(gaps)))
    inner = int(runs.sum()) - len(runs)
    out = []
    for m in ms:
        i = int(np.searchsorted(gaps, m, side="left"))     # gaps[:i] < m
        out.append(inner + int(prefix[i]) + i + m * (len(gaps) - i))
    return out


def _window_cover(e: np.ndarray, m: int) -> np.ndarray:
    """Mask of cells r with some E cell among r-1, ..., r-M (prefix sums)."""
    size = e.size
    m = min(m, size)
    ext = np.concatenate((e[size - m:], e)).astype(np.int32)
    cs = np.concatenate(([0], np.cumsum(ext, dtype=np.int64)))
    return (cs[m:m + size] - cs[:size]) > 0


def _odometer_sweep(e: ArcSet, n_max: int) -> list:
    """Measures of tau^1 E ∪ ... ∪ tau^M E for M <= N by iterating set images."""
    tau = Odometer()
    img, acc, out = e, ArcSet.empty(), []
    for _ in range(n_max):
        img = tau.image_set(img)
        acc = acc | img
        out.append(acc)
    return out


# --- per-kind checks ------------------------------------------------------------


def _verify_almost_invariant(data: dict, res: VerifyResult) -> None:
    a = ArcSet.from_json(data["A"])
    n, delta, eps = int(data["n"]), _q(data["delta"]), _q(data["epsilon"])
    tau = Odometer()
    inter, img = a, a
    for _ in range(n):
        img = tau.image_set(img)
        inter = inter & img
    _expect(res, "A", "intersection_measure", _q(data["intersection_measure"]), inter.measure())
    if a.measure() != delta:
        res.fail(f"A: measure {a.measure()} != delta {delta}")
    res.recomputed_pass = a.measure() == delta and inter.measure() >= (1 - eps) * delta


def _rebuild_sweep_sets(data: dict):
    rates = RateSeq.from_json(data["rates"])
    k = int(data["resolution"])
    a_sets = [ArcSet.from_json(a) for a in data["A"]]
    return rates, k, a_sets


def _check_schedule_sets(data: dict, a_sets, res: VerifyResult) -> None:
    blocks = data["schedule"]["blocks"]
    if len(blocks) != len(a_sets):
        res.fail("schedule: block count differs from the number of A sets")
        return
    for b, a in zip(blocks, a_sets):
        if a.measure() != _q(b["gamma"]):
            res.fail(f"block {b['j']}: measure(A_j) = {a.measure()} != gamma_j = {b['gamma']}")


def _verify_sweep(data: dict, res: VerifyResult) -> None:
    rates, k, a_sets = _rebuild_sweep_sets(data)
    n_max = int(data["horizon"])
    _check_schedule_sets(data, a_sets, res)
    e = ArcSet.from_json(data["E"])
    rebuilt = union_all(a_sets).complement()
    if rebuilt != e:
        res.fail("E: does not equal the complement of the union of the A sets")
    _expect(res, "E", "measure_E", _q(data["measure_E"]), e.measure())
    if n_max <= SET_ROUTE_LIMIT:
        measures = [u.measure() for u in _odometer_sweep(e, n_max)]
    else:
        mask = _tower_mask(e, k)
        size = mask.size
        measures = [Fraction(c, size) for c in _covered_counts(mask, range(1, n_max + 1))]
    rows = data["rows"]
    if len(rows) != n_max:
        res.fail(f"rows: expected {n_max} rows, found {len(rows)}")
    passing = e.measure() > 0
    for row, m_u in zip(rows, measures):
        m = int(row["M"])
        bound = 1 - rates(m)
        _expect(res, f"row M={m}", "measure", _q(row["measure"]), m_u)
        _expect(res, f"row M={m}", "bound", _q(row["bound"]), bound)
        if m_u > bound:
            passing = False
            res.fail(f"row M={m}: measure {m_u} exceeds bound {bound}")
    res.recomputed_pass = passing and len(rows) == n_max


def _verify_invisible(data: dict, res: VerifyResult) -> None:
    rates, k, a_sets = _rebuild_sweep_sets(data)
    n_max = int(data["horizon"])
    _check_schedule_sets(data, a_sets, res)
    starts = [int(b["N_j"]) for b in data["schedule"]["blocks"]]
    suffix = [None] * len(a_sets)
    acc = ArcSet.empty()
    for j in range(len(a_sets) - 1, -1, -1):
        acc = acc | a_sets[j]
        suffix[j] = acc.complement()
    if data.get("E") is not None:
        for j, (stored, ej) in enumerate(zip(data["E"], suffix), start=1):
            if ArcSet.from_json(stored) != ej:
                res.fail(f"block {j}: stored E_j differs from the complement of A_j ∪ A_(j+1) ∪ ...")
    rows = data["rows"]
    if len(rows) != n_max:
        res.fail(f"rows: expected {n_max} rows, found {len(rows)}")
    passing = len(rows) == n_max

    def block_of(m):
        j = 0
        while j + 1 < len(starts) and starts[j + 1] <= m:
            j += 1
        return j

    blocks = [block_of(m) for m in range(1, n_max + 1)]
    suffix_measures = [e.measure() for e in suffix]
    prev_e = None
    for row, j in zip(rows, blocks):
        m = int(row["M"])
        m_e = suffix_measures[j]
        _expect(res, f"row M={m}", "block", int(row["block"]), j + 1)
        _expect(res, f"row M={m}", "measure_E", _q(row["measure_E"]), m_e)
        _expect(res, f"row M={m}", "eps", _q(row["eps"]), rates(m))
        if prev_e is not None and m_e < prev_e:
            passing = False
            res.fail(f"row M={m}: measure(E_M) decreased")
        prev_e = m_e

    if n_max <= SET_ROUTE_LIMIT and rows and "B" in rows[0]:
        _invisible_by_sets(rows, suffix, blocks, rates, res)
    else:
        _invisible_by_cells(rows, suffix, blocks, starts, rates, k, res)
    res.recomputed_pass = passing and not any(f.startswith("row") for f in res.failures)


def _invisible_by_sets(rows, suffix, blocks, rates, res) -> None:
    tau = Odometer()
    prev_b = None
    sweeps = {}
    for row, j in zip(rows, blocks):
        m = int(row["M"])
        if j not in sweeps:
            sweeps[j] = _odometer_sweep(suffix[j], len(rows))
        cover = sweeps[j][m - 1]
        b = ArcSet.from_json(row["B"])
        _expect(res, f"row M={m}", "measure_B", _q(row["measure_B"]), b.measure())
        if b != cover.complement():
            res.fail(f"row M={m}: B_M is not the complement of tau^1 E_M ∪ ... ∪ tau^M E_M")
        img = suffix[j]
        for step in range(1, m + 1):
            img = tau.image_set(img)
            if not img.isdisjoint(b):
                res.fail(f"row M={m}: tau^{step}(E_M) meets B_M")
                break
        if b.measure() < rates(m):
            res.fail(f"row M={m}: measure(B_M) = {b.measure()} < eps_M = {rates(m)}")
        if prev_b is not None and not b.issubset(prev_b):
            res.fail(f"row M={m}: B_M is not inside B_(M-1)")
        prev_b = b


def _invisible_by_cells(rows, suffix, blocks, starts, rates, k, res) -> None:
    masks = {}
    size = 2 ** k
    for j in sorted(set(blocks)):
        masks[j] = _tower_mask(suffix[j], k)
    by_block = {}
    for row, j in zip(rows, blocks):
        by_block.setdefault(j, []).append(int(row["M"]))
    measures = {}
    for j, ms in by_block.items():
        covered = _covered_counts(masks[j], ms)
        for m, c in zip(ms, covered):
            measures[m] = Fraction(size - c, size)
    for row in rows:
        m = int(row["M"])
        _expect(res, f"row M={m}", "measure_B", _q(row["measure_B"]), measures[m])
        if measures[m] < rates(m):
            res.fail(f"row M={m}: measure(B_M) = {measures[m]} < eps_M = {rates(m)}")
    # material checks at the first and last M of every block
    prev_last_cover = None
    for j in sorted(by_block):
        ms = by_block[j]
        first_cover = _window_cover(masks[j], ms[0])
        last_cover = _window_cover(masks[j], ms[-1])
        for m, cover in ((ms[0], first_cover), (ms[-1], last_cover)):
            if Fraction(int((~cover).sum()), size) != measures[m]:
                res.fail(f"row M={m}: window and run-length measures of B_M disagree")
        # B at the first M of this block must sit inside B at the last M of the previous one
        if prev_last_cover is not None and (~first_cover & prev_last_cover).any():
            res.fail(f"row M={ms[0]}: B_M is not inside B_(M-1) at a block boundary")
        prev_last_cover = last_cover


def _verify_visible(data: dict, res: VerifyResult) -> None:
    rates = RateSeq.from_json(data["rates"])
    scanned = int(data["scanned"])
    exps = [dyadic_exponent_of(rates(n)) for n in range(1, scanned + 1)]
    if exps != list(data["exponents"]):
        bad = next(n for n, (a, b) in enumerate(zip(exps, data["exponents"]), start=1) if a != b) \
            if len(exps) == len(data["exponents"]) else scanned
        res.fail(f"index n={bad}: stored exponent differs from the recomputed dyadic floor")
    passing = all(a <= b for a, b in zip(exps, exps[1:]))
    if not passing:
        res.fail("targets are not nested")
    for blk in data["blocks"]:
        j = int(blk["j"])
        spans, total, prod = [], Fraction(0), Fraction(1)
        for ix in blk["indices"]:
            n, m = int(ix["n"]), int(ix["m"])
            if exps[n - 1] != m:
                res.fail(f"block {j}: index n={n} has m={m}, recomputed {exps[n - 1]}")
            if m:
                spans.append((n + 1, n + m))
            p = Fraction(1, 2 ** m)
            _expect(res, f"block {j} index n={n}", "measure", _q(ix["measure"]), p)
            total += p
            prod *= 1 - p
        spans.sort()
        if any(a[1] >= b[0] for a, b in zip(spans, spans[1:])):
            passing = False
            res.fail(f"block {j}: digit windows overlap")
        _expect(res, f"block {j}", "sum", _q(blk["sum"]), total)
        _expect(res, f"block {j}", "product", _q(blk["product"]), prod)
        if total < j:
            passing = False
            res.fail(f"block {j}: sum {total} < {j}")
        if prod > _exp_neg_bound(j):
            passing = False
            res.fail(f"block {j}: product exceeds the e^-j bound")
        if blk.get("exact_miss") is not None:
            top = max(int(ix["n"]) for ix in blk["indices"])
            chosen = {int(ix["n"]): ArcSet.interval(0, Fraction(1, 2 ** int(ix["m"]))) for ix in blk["indices"]}
            table = [chosen.get(n, ArcSet.empty()) for n in range(1, top + 1)]
            _, hit = tail_preimage_union(Doubling(), table, min(chosen), top)
            _expect(res, f"block {j}", "exact_miss", _q(blk["exact_miss"]), 1 - hit)
            if 1 - hit != prod:
                passing = False
                res.fail(f"block {j}: exact miss measure {1 - hit} != product {prod}")
    res.recomputed_pass = passing and not res.failures


def _verify_small_sweep(data: dict, res: VerifyResult) -> None:
    tau = map_from_json(data["map"])
    eps = _q(data["epsilon"])
    seeds = [ArcSet.from_json(s) for s in data["seeds"]]
    e = ArcSet.from_json(data["E"])
    budget = sum((n * s.measure() for n, s in enumerate(seeds, start=1)), Fraction(0))
    _expect(res, "budget", "budget", _q(data["budget"]), budget)
    _expect(res, "E", "measure", _q(data["measure"]), e.measure())
    passing = budget <= eps and e.measure() >= 1 - eps
    fwd, acc = e, ArcSet.empty()
    for row, seed in zip(data["rows"], seeds):
        n = int(row["n"])
        fwd = tau.image_set(fwd)
        acc = acc | fwd
        # E_n must avoid tau^-k E for k <= n, equivalently tau^k(E_n) avoids E
        img = seed
        clear = True
        for _ in range(n):
            img = tau.image_set(img)
            clear = clear and img.isdisjoint(e)
        _expect(res, f"row n={n}", "forward", _q(row["forward"]), acc.measure())
        _expect(res, f"row n={n}", "witness_uncovered", bool(row["witness_uncovered"]), clear)
        if not clear or acc.measure() > 1 - seed.measure():
            passing = False
            res.fail(f"row n={n}: seed E_n is not left uncovered")
    res.recomputed_pass = passing


_CHECKERS = {
    "almost_invariant": _verify_almost_invariant,
    "sweep": _verify_sweep,
    "invisible_target": _verify_invisible,
    "visible_target": _verify_visible,
    "small_sweep": _verify_small_sweep,
}


def verify_certificate(data: dict) -> VerifyResult:
    kind = data.get("kind")
    if kind not in _CHECKERS:
        raise ValueError(f"unknown certificate kind {kind!r}")
    res = VerifyResult(kind, claimed_pass=data.get("passes"))
    try:
        _CHECKERS[kind](data, res)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        res.recomputed_pass = False
        res.fail(f"malformed certificate: {exc!r}")
    if res.claimed_pass is not None and bool(res.claimed_pass) != res.recomputed_pass:
        res.fail(f"certificate claims passes={res.claimed_pass}, recomputed {res.recomputed_pass}")
    return res
