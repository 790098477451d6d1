import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import shifted_levels_intersection

from shrinktarget.arcs import ArcSet, union_all
from shrinktarget.constructions import (BlockSumError, BudgetError, InfeasibleScheduleError,
                                        MeasureMismatchError, Rearrangement, almost_invariant_set,
                                        block_visibility, conjugated_hits, generic_small_sweep,
                                        invisible_target, rearrangement_map, slow_sweep_complement,
                                        sweep_schedule, verify_certificate, visible_target_dyadic)
from shrinktarget.constructions.visible import hits_in_block, required_bits
from shrinktarget.maps import Doubling, NotInvertibleError, Odometer, Rotation
from shrinktarget.rates import RateSeq, largest_power_of_two_at_most


def slow_rates(n_max):
    return RateSeq.from_table([Fraction(1, 2 * n + 2) for n in range(1, n_max + 1)])


def forward_sweep(tau, e, m):
    """tau^1 E ∪ ... ∪ tau^M E by iterating exact set images."""
    out, img = [], e
    for _ in range(m):
        img = tau.image_set(img)
        out.append(img)
    return union_all(out)


def round_trip(cert):
    return json.loads(json.dumps(cert.to_json()))


# --- almost-invariant sets ------------------------------------------------------------


def intersection_by_sets(a, n):
    odo, cur, img = Odometer(), a, a
    for _ in range(n):
        img = odo.image_set(img)
        cur = cur & img
    return cur.measure()


@pytest.mark.parametrize("n, delta, eps, k, value", [
    (4, Fraction(1, 2), Fraction(1, 4), 5, Fraction(3, 8)),
    (1, Fraction(1, 2), Fraction(1, 2), 2, Fraction(1, 4)),
])
def test_almost_invariant_frozen(n, delta, eps, k, value):
    cert = almost_invariant_set(n, delta, eps)
    assert (cert.K, cert.intersection_measure) == (k, value)
    assert intersection_by_sets(cert.A, n) == value
    assert cert.A.measure() == delta and cert.passes


@given(st.integers(1, 12), st.integers(1, 4), st.data())
def test_almost_invariant_matches_oracles(n, t, data):
    delta = Fraction(data.draw(st.integers(1, 2 ** t - 1)), 2 ** t)
    eps = Fraction(data.draw(st.integers(1, 9)), 10)
    cert = almost_invariant_set(n, delta, eps)
    size = 2 ** cert.K
    assert cert.intersection_measure == Fraction(shifted_levels_intersection(size, cert.levels, n), size)
    assert cert.intersection_measure == Fraction(cert.levels - n, size)
    assert cert.passes
    if cert.K <= 8:
        assert intersection_by_sets(cert.A, n) == cert.intersection_measure
    assert verify_certificate(round_trip(cert)).ok


def test_almost_invariant_rejects_bad_input():
    with pytest.raises(ValueError):
        almost_invariant_set(3, Fraction(1, 3), Fraction(1, 4))
    with pytest.raises(ValueError):
        almost_invariant_set(0, Fraction(1, 2), Fraction(1, 4))


# --- schedule -----------------------------------------------------------------------------


def schedule_oracle(eps, c=Fraction(1, 2)):
    """The gamma / N_j / K_j schedule straight from its definition."""
    t = 1
    while True:
        g1 = Fraction(-(-2 * eps[0] * 2 ** t // 1), 2 ** t)
        if g1 < 1:
            break
        t += 1
    gammas, starts = [g1], [1]
    j = 2
    while True:
        gamma = largest_power_of_two_at_most((1 - g1) * c / 2 ** j)
        later = [n for n in range(starts[-1] + 1, len(eps) + 1) if 2 * eps[n - 1] <= gamma]
        if not later:
            break
        gammas.append(gamma)
        starts.append(later[0])
        j += 1
    lengths = starts[1:] + [len(eps)]
    exps = []
    for nj, g in zip(lengths, gammas):
        k = 1
        while not (nj <= g * 2 ** k / 2 and (g * 2 ** k).denominator == 1):
            k += 1
        exps.append(k)
    return gammas, starts, lengths, exps


@pytest.mark.parametrize("rates, horizon", [
    (slow_rates(16), 16), (slow_rates(200), 200), (slow_rates(4096), 4096),
    (RateSeq.from_table(["1/8", "1/16", "1/32", "1/64"]), 4),
    (RateSeq.c_over_n(Fraction(1, 3)), 300),
    (RateSeq.dyadic_floor(RateSeq.c_over_n_log_n(Fraction(1, 4))), 500),
])
def test_schedule_matches_definition(rates, horizon):
    sched = sweep_schedule(rates, horizon)
    assert (sched.gammas, sched.starts, sched.lengths, sched.exponents) == \
        schedule_oracle(rates.values(horizon))


def test_schedule_frozen_at_4096():
    sched = sweep_schedule(slow_rates(4096), 4096)
    assert sched.blocks == 10 and sched.resolution == 25
    assert sched.starts == [1, 15, 31, 63, 127, 255, 511, 1023, 2047, 4095]


def test_schedule_rejects_large_rates():
    with pytest.raises(InfeasibleScheduleError):
        sweep_schedule(RateSeq.c_over_n(1), 10)


# --- slow sweep --------------------------------------------------------------------------------


@pytest.mark.parametrize("rates, horizon", [
    (slow_rates(16), 16), (RateSeq.from_table(["1/8", "1/16", "1/32", "1/64"]), 4),
])
def test_sweep_matches_set_iteration(rates, horizon):
    cert = slow_sweep_complement(rates, horizon)
    odo = Odometer()
    assert cert.E == ~union_all(cert.A_sets)
    assert cert.measure_E == cert.E.measure() > 0
    for m, value, bound in cert.rows:
        assert forward_sweep(odo, cert.E, m).measure() == value
        assert bound == 1 - rates(m)
    assert cert.passes
    assert verify_certificate(round_trip(cert)).ok


def test_sweep_frozen_first_row():
    cert = slow_sweep_complement(RateSeq.from_table(["1/8", "1/16", "1/32", "1/64"]), 4)
    assert cert.rows[0] == (1, Fraction(1, 2), Fraction(7, 8))


# --- invisible targets ---------------------------------------------------------------------------


def invisible_oracle(cert, rates, horizon):
    """B_M = X minus (tau^1 E_M ∪ ... ∪ tau^M E_M), E_M = X minus the A_j of blocks >= block(M)."""
    odo, sched = Odometer(), cert.schedule
    out = []
    for m in range(1, horizon + 1):
        j = sched.block_of(m)
        e = ~union_all(cert.A_sets[j:])
        b = ~forward_sweep(odo, e, m)
        disjoint = True
        img = e
        for _ in range(m):
            img = odo.image_set(img)
            disjoint &= img.isdisjoint(b)
        out.append((e, b, disjoint))
    return out


@pytest.mark.parametrize("rates, horizon", [
    (slow_rates(16), 16), (RateSeq.from_table(["1/8", "1/16", "1/32", "1/64"]), 4),
    (RateSeq.from_table(["1/4"] * 4), 4),
])
def test_invisible_matches_set_iteration(rates, horizon):
    cert = invisible_target(rates, horizon)
    for row, (e, b, disjoint) in zip(cert.rows, invisible_oracle(cert, rates, horizon)):
        assert row.B == b and row.measure_B == b.measure()
        assert cert.E_for(row.M) == e
        assert disjoint and row.disjoint
        assert row.measure_B >= rates(row.M)
    table = cert.target_table()
    assert all(q.issubset(p) for p, q in zip(table, table[1:])) == cert.nested
    assert cert.passes
    assert verify_certificate(round_trip(cert)).ok


def test_invisible_frozen_values():
    cert = invisible_target(slow_rates(16), 16)
    assert cert.rows[-1].measure_B == Fraction(17, 512)
    assert cert.schedule.resolution == 9
    quarter = invisible_target(RateSeq.from_table(["1/4"] * 4), 4)
    assert [r.measure_B for r in quarter.rows] == [
        Fraction(1, 2), Fraction(7, 16), Fraction(3, 8), Fraction(5, 16)]


def test_invisible_without_materialized_sets():
    cert = invisible_target(slow_rates(100), 100)
    assert not cert.materialized
    with pytest.raises(ValueError):
        cert.target_table()
    data = round_trip(cert)
    assert data["E"] is None
    assert verify_certificate(data).ok


def test_invisible_routes_agree():
    sets = invisible_target(slow_rates(40), 40, materialize=True)
    cells_only = invisible_target(slow_rates(40), 40, materialize=False)
    assert [r.measure_B for r in sets.rows] == [r.measure_B for r in cells_only.rows]
    assert verify_certificate(round_trip(sets)).ok and verify_certificate(round_trip(cells_only)).ok


# --- verifier tamper detection ----------------------------------------------------------------------


def test_verifier_detects_tampering():
    data = round_trip(invisible_target(slow_rates(16), 16))
    data["rows"][3]["measure_B"] = "1/2"
    res = verify_certificate(data)
    assert not res.ok and "M=4" in res.first_failure

    data = round_trip(slow_sweep_complement(slow_rates(16), 16))
    data["rows"][0]["measure"] = "0/1"
    assert not verify_certificate(data).ok

    data = round_trip(almost_invariant_set(4, Fraction(1, 2), Fraction(1, 4)))
    data["intersection_measure"] = "1/2"
    assert not verify_certificate(data).ok

    data = round_trip(almost_invariant_set(4, Fraction(1, 2), Fraction(1, 4)))
    data["passes"] = False
    assert not verify_certificate(data).ok


def test_verifier_rejects_unknown_kind():
    with pytest.raises(ValueError):
        verify_certificate({"kind": "nope", "passes": True})


# --- visible targets ------------------------------------------------------------------------------


def quarter_table(n):
    return RateSeq.from_table(["1/4"] * n)


def test_visible_quarter_blocks():
    cert = visible_target_dyadic(quarter_table(40), 2, max_index=40)
    first = cert.blocks[0]
    assert [ix.n for ix in first.indices] == [1, 4, 7, 10]
    assert first.product == Fraction(81, 256)
    assert cert.exact_misses[1] == Fraction(81, 256)
    assert cert.passes and cert.bracket_ok()
    assert verify_certificate(round_trip(cert)).ok


def test_block_miss_matches_digit_count():
    cert = visible_target_dyadic(quarter_table(40), 1, max_index=40)
    block = cert.blocks[0]
    bits = required_bits(cert)
    misses = sum(not hits_in_block(Fraction(k, 2 ** bits), block) for k in range(2 ** bits))
    assert Fraction(misses, 2 ** bits) == block.product == cert.exact_misses[1]


@given(st.integers(0, 2 ** 20 - 1))
def test_hits_in_block_matches_orbit(k):
    cert = visible_target_dyadic(quarter_table(40), 2, max_index=40)
    x = Fraction(k, 2 ** 20)
    tau = Doubling()
    for block in cert.blocks:
        top = max(ix.n for ix in block.indices)
        orbit = list(tau.orbit(x, top))
        brute = any(orbit[ix.n - 1] < ix.measure for ix in block.indices)
        assert hits_in_block(x, block) == brute


def test_block_visibility_and_bits():
    cert = visible_target_dyadic(quarter_table(40), 2, max_index=40)
    with pytest.raises(ValueError):
        block_visibility(cert, [Fraction(1, 3)])
    assert block_visibility(cert, [Fraction(0)]) == 1
    sample = [Fraction(k, 2 ** 24) for k in range(0, 2 ** 24, 2 ** 14)]
    v = block_visibility(cert, sample)
    assert 0 < v <= 1


def test_visible_scan_limits():
    with pytest.raises(BlockSumError):
        visible_target_dyadic(RateSeq.c_over_n(1), 3, max_index=1000)
    with pytest.raises(BlockSumError):
        visible_target_dyadic(RateSeq.c_over_n_pow(1, 2), 1)


# --- small sweeps -------------------------------------------------------------------------------------


def test_small_sweep_on_rotation():
    tau = Rotation.from_quotients([1] * 10)
    seeds = [ArcSet.interval(0, Fraction(1, 64)), ArcSet.interval(Fraction(1, 2), Fraction(1, 2) + Fraction(1, 256))]
    cert = generic_small_sweep(seeds, tau, Fraction(1, 16))
    assert cert.budget == Fraction(1, 64) + Fraction(2, 256)
    assert cert.measure >= 1 - cert.epsilon
    for row, seed in zip(cert.rows, seeds):
        back = union_all(
            _iterate(tau.preimage_set, cert.E, k) for k in range(1, row.n + 1))
        assert back.measure() == row.backward
        assert seed.isdisjoint(back)
    assert cert.passes
    assert verify_certificate(round_trip(cert)).ok


def test_small_sweep_budget_of_shrinking_seeds():
    # E_n = [0, 4^-n / n): sum n m(E_n) = 1/4 + 1/16 + 1/64
    tau = Rotation.from_quotients([1] * 10)
    seeds = [ArcSet.interval(0, Fraction(1, 4 ** n * n)) for n in (1, 2, 3)]
    cert = generic_small_sweep(seeds, tau, Fraction(21, 64))
    assert cert.budget == Fraction(21, 64)
    assert cert.measure >= Fraction(43, 64)
    assert cert.passes
    with pytest.raises(BudgetError):
        generic_small_sweep(seeds, tau, Fraction(20, 64))


def _iterate(f, s, k):
    for _ in range(k):
        s = f(s)
    return s


def test_small_sweep_guards():
    tau = Rotation.from_quotients([1] * 10)
    with pytest.raises(BudgetError):
        generic_small_sweep([ArcSet.interval(0, Fraction(1, 2))], tau, Fraction(1, 4))
    with pytest.raises(NotInvertibleError):
        generic_small_sweep([ArcSet.interval(0, Fraction(1, 64))], Doubling(), Fraction(1, 4))


# --- rearrangements -------------------------------------------------------------------------------------


@st.composite
def nested_families(draw):
    d = draw(st.sampled_from((8, 16, 24)))
    depth = draw(st.integers(1, 4))
    cells = list(range(d))
    order = draw(st.permutations(cells))
    sizes = sorted(draw(st.lists(st.integers(1, d), min_size=depth, max_size=depth)), reverse=True)
    fam = [ArcSet([(Fraction(c, d), Fraction(c + 1, d)) for c in order[:s]]) for s in sizes]
    return fam


@given(nested_families())
def test_rearrangement_carries_family_to_intervals(sources):
    targets = [ArcSet.interval(0, b.measure()) for b in sources]
    sigma = rearrangement_map(sources, targets)
    for b, c in zip(sources, targets):
        assert sigma.image_set(b) == c
        assert sigma.preimage_set(c) == b
    probe = ArcSet.interval(Fraction(1, 7), Fraction(5, 7))
    assert sigma.image_set(probe).measure() == probe.measure()
    assert Rearrangement.from_json(sigma.to_json()).pieces == sigma.pieces
    for k in range(20):
        x = Fraction(k, 20)
        assert sigma.inverse_apply(sigma.apply(x)) == x


def test_rearrangement_guards():
    with pytest.raises(MeasureMismatchError, match="level 1"):
        rearrangement_map([ArcSet.interval(0, Fraction(1, 2))], [ArcSet.interval(0, Fraction(1, 4))])
    with pytest.raises(ValueError, match="not nested"):
        rearrangement_map([ArcSet.interval(0, Fraction(1, 4)), ArcSet.interval(Fraction(1, 2), Fraction(3, 4))],
                          [ArcSet.interval(0, Fraction(1, 4)), ArcSet.interval(0, Fraction(1, 4))])


def test_conjugated_hits_routes_agree():
    cert = invisible_target(slow_rates(16), 16)
    table = cert.target_table()
    targets = [ArcSet.interval(0, b.measure()) for b in table]
    sigma = rearrangement_map(table, targets)
    for k in range(32):
        rec = conjugated_hits(Odometer(), sigma, Fraction(2 * k + 1, 64), targets, 16)
        assert rec.horizon == 16
