from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shrinktarget.rates import (HorizonError, RateSeq, exp_neg_upper_bound,
                                largest_power_of_two_at_most, partial_sum)

families = st.sampled_from([
    RateSeq.c_over_n(1), RateSeq.c_over_n(Fraction(1, 3)), RateSeq.c_over_n_log_n(2),
    RateSeq.c_over_n_pow(1, 2), RateSeq.c_over_n_pow(3, Fraction(3, 2)), RateSeq.log_n_over_n(),
])


def test_closed_forms():
    assert RateSeq.c_over_n(Fraction(1, 2))(4) == Fraction(1, 8)
    assert RateSeq.c_over_n_pow(1, 2)(10) == Fraction(1, 100)
    assert RateSeq.from_table(["1/2", "1/4"])(2) == Fraction(1, 4)


@given(families, st.integers(1, 5000))
def test_dyadic_floor_brackets_the_rate(rates, n):
    d = RateSeq.dyadic_floor(rates)(n)
    eps = rates(n)
    assert d <= eps < 2 * d
    p = d.numerator * d.denominator
    assert min(d.numerator, d.denominator) == 1 and p & (p - 1) == 0


@given(st.fractions(min_value=Fraction(1, 10 ** 9), max_value=10 ** 3))
def test_largest_power_of_two(x):
    p = largest_power_of_two_at_most(x)
    assert p <= x < 2 * p


@given(st.integers(2, 5000), st.sampled_from([Fraction(1, 2), Fraction(3, 2), Fraction(5, 3)]))
def test_fractional_power_floor(n, alpha):
    # v = floor_{2^-64}(c / n^alpha): v^q <= c^q / n^p < (v + 2^-64)^q
    rates = RateSeq.c_over_n_pow(1, alpha)
    v = rates(n)
    p, q = alpha.numerator, alpha.denominator
    ulp = Fraction(1, 2 ** 64)
    assert v ** q * n ** p <= 1 < (v + ulp) ** q * n ** p


@given(st.integers(1, 3000))
def test_transcendental_families_are_floored_from_below(n):
    with mpmath.workdps(50):
        exact = mpmath.log(n + 1) / n
        v = RateSeq.log_n_over_n()(n)
        assert mpmath.mpf(v.numerator) / v.denominator <= exact
        assert exact - mpmath.mpf(v.numerator) / v.denominator < mpmath.mpf(2) ** -60


@given(families)
def test_positive_and_non_increasing(rates):
    rates.validate(300)


def test_validate_rejects_increasing_tables():
    with pytest.raises(ValueError):
        RateSeq.from_table(["1/4", "1/2"]).validate(2)


def test_table_horizon():
    rates = RateSeq.from_table(["1/2", "1/4"])
    assert rates.horizon == 2
    with pytest.raises(HorizonError):
        rates(3)


@given(families)
def test_json_round_trip(rates):
    again = RateSeq.from_json(rates.to_json())
    assert again.to_json() == rates.to_json()
    assert [again(n) for n in (1, 7, 99)] == [rates(n) for n in (1, 7, 99)]


def test_divergence_flags():
    assert RateSeq.c_over_n(1).diverges() is True
    assert RateSeq.c_over_n_pow(1, 2).diverges() is False
    assert RateSeq.dyadic_floor(RateSeq.log_n_over_n()).diverges() is True
    assert RateSeq.from_table(["1/2"]).diverges() is None


def test_partial_sum_is_harmonic():
    assert partial_sum(RateSeq.c_over_n(1), 4) == Fraction(25, 12)


@pytest.mark.parametrize("j", range(1, 12))
def test_exp_neg_upper_bound(j):
    bound = exp_neg_upper_bound(j)
    with mpmath.workdps(200):
        e = mpmath.exp(-j)
        b = mpmath.mpf(bound.numerator) / bound.denominator
        assert e < b < e * (1 + mpmath.mpf(10) ** -20)
