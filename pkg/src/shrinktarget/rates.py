"""Radius / measure schedules epsilon_n.

Every value is an exact positive rational.  Families whose closed form is
irrational (logarithms, fractional powers) are realized by their dyadic floor
at resolution 2^-64, which keeps them positive and nonincreasing over any
horizon where the true value exceeds 2^-64.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

from .arcs import frac, format_rational

FLOOR_BITS = 64
_MP_DPS = 60


class HorizonError(ValueError):
    """A finite table was asked for a term it does not have."""


def _mp_dyadic_floor(value) -> Fraction:
    return Fraction(int(mpmath.floor(value * mpmath.mpf(2) ** FLOOR_BITS)), 2 ** FLOOR_BITS)


def _iroot_floor(x: int, k: int) -> int:
    """floor(x ** (1/k)) for x >= 0."""
    if x < 2:
        return x
    lo, hi = 0, 1 << (x.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** k <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo


def largest_power_of_two_at_most(x: Fraction) -> Fraction:
    """2^-m with m the smallest integer such that 2^-m <= x (m may be negative)."""
    x = frac(x)
    if x <= 0:
        raise ValueError("need a positive value")
    m = x.denominator.bit_length() - x.numerator.bit_length()
    while Fraction(2) ** -m > x:
        m += 1
    while Fraction(2) ** -(m - 1) <= x:
        m -= 1
    return Fraction(2) ** -m


def dyadic_exponent_of(x: Fraction) -> int:
    """m = ceil(log2(1/x)), clamped at 0: the digit-window length of [0, 2^-m) inside [0, x)."""
    p = largest_power_of_two_at_most(x)
    return max(0, p.denominator.bit_length() - 1)


@dataclass(frozen=True)
class RateSeq:
    """A schedule n -> epsilon_n for n >= 1.

    family is one of ``"c/n"``, ``"c/(n log n)"``, ``"c/n^a"``, ``"log n/n"``,
    ``"table"``, ``"dyadic"`` (largest power of two <= the inner schedule).
    """

    family: str
    c: Fraction = Fraction(1)
    alpha: Fraction = Fraction(1)
    table: tuple = ()
    inner: "RateSeq | None" = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    FAMILIES = ("c/n", "c/(n log n)", "c/n^a", "log n/n", "table", "dyadic")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown rate family {self.family!r}")
        object.__setattr__(self, "c", frac(self.c))
        object.__setattr__(self, "alpha", frac(self.alpha))
        object.__setattr__(self, "table", tuple(frac(v) for v in self.table))
        if self.c <= 0 or self.alpha <= 0:
            raise ValueError("rate parameters must be positive")
        if self.family == "table" and any(v <= 0 for v in self.table):
            raise ValueError("table rates must be positive")
        if self.family == "dyadic" and self.inner is None:
            raise ValueError("dyadic floor needs an inner schedule")

    # constructors
    @classmethod
    def c_over_n(cls, c=1):
        return cls("c/n", c=c)

    @classmethod
    def c_over_n_log_n(cls, c=1):
        return cls("c/(n log n)", c=c)

    @classmethod
    def c_over_n_pow(cls, c=1, alpha=1):
        return cls("c/n^a", c=c, alpha=alpha)

    @classmethod
    def log_n_over_n(cls):
        return cls("log n/n")

    @classmethod
    def from_table(cls, values):
        return cls("table", table=tuple(values))

    @classmethod
    def dyadic_floor(cls, inner: "RateSeq"):
        return cls("dyadic", inner=inner)

    @property
    def horizon(self) -> int | None:
        if self.family == "table":
            return len(self.table)
        if self.family == "dyadic":
            return self.inner.horizon
        return None

    def __call__(self, n: int) -> Fraction:
        if n < 1:
            raise ValueError("rates are indexed from n = 1")
        if self.family in ("c/n", "table"):
            return self._value(n)
        cached = self._cache.get(n)
        if cached is None:
            cached = self._cache[n] = self._value(n)
        return cached

    def _value(self, n: int) -> Fraction:
        fam = self.family
        if fam == "c/n":
            return self.c / n
        if fam == "table":
            if n > len(self.table):
                raise HorizonError(f"rate table has {len(self.table)} terms, asked for n = {n}")
            return self.table[n - 1]
        if fam == "dyadic":
            return largest_power_of_two_at_most(self.inner(n))
        if fam == "c/n^a":
            a = self.alpha
            if a.denominator == 1:
                return self.c / Fraction(n) ** int(a)
            # floor(2^B * c / n^(p/q)) = floor(((2^B c_num)^q / (c_den^q n^p))^(1/q))
            p, q = a.numerator, a.denominator
            num = (2 ** FLOOR_BITS * self.c.numerator) ** q
            den = self.c.denominator ** q * n ** p
            return Fraction(_iroot_floor(num // den, q), 2 ** FLOOR_BITS)
        with mpmath.workdps(_MP_DPS):
            if fam == "log n/n":
                # ln(n + 1)/n: same asymptotics as log n/n, positive and decreasing from n = 1
                return _mp_dyadic_floor(mpmath.log(n + 1) / n)
            if fam == "c/(n log n)":
                c = mpmath.mpf(self.c.numerator) / self.c.denominator
                return _mp_dyadic_floor(c / (n * mpmath.log(n + 1)))
        raise AssertionError(fam)

    def values(self, n_max: int) -> list:
        return [self(n) for n in range(1, n_max + 1)]

    def validate(self, n_max: int) -> None:
        prev = None
        for n in range(1, n_max + 1):
            v = self(n)
            if v <= 0:
                raise ValueError(f"epsilon_{n} = {v} is not positive")
            if prev is not None and v > prev:
                raise ValueError(f"rates increase at n = {n}: {prev} -> {v}")
            prev = v

    def diverges(self) -> bool | None:
        """Whether sum epsilon_n = infinity, decided symbolically (None for tables)."""
        fam = self.family
        if fam in ("c/n", "c/(n log n)", "log n/n"):
            return True
        if fam == "c/n^a":
            return self.alpha <= 1
        if fam == "dyadic":
            return self.inner.diverges()
        return None

    def to_json(self) -> dict:
        out = {"family": self.family}
        if self.family in ("c/n", "c/(n log n)", "c/n^a"):
            out["c"] = format_rational(self.c)
        if self.family == "c/n^a":
            out["alpha"] = format_rational(self.alpha)
        if self.family == "table":
            out["table"] = [format_rational(v) for v in self.table]
        if self.family == "dyadic":
            out["inner"] = self.inner.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "RateSeq":
        fam = data["family"]
        if fam == "dyadic":
            return cls.dyadic_floor(cls.from_json(data["inner"]))
        if fam == "table":
            return cls.from_table(data["table"])
        return cls(fam, c=data.get("c", 1), alpha=data.get("alpha", 1))


def partial_sum(rates: RateSeq, n_max: int) -> Fraction:
    return sum((rates(n) for n in range(1, n_max + 1)), Fraction(0))


@lru_cache(maxsize=None)
def exp_neg_upper_bound(j: int, terms: int = 60) -> Fraction:
    """Rational r with e^-j < r, from the truncated series e^j > sum_{k<=T} j^k/k!."""
    total = Fraction(0)
    term = Fraction(1)
    for k in range(terms + 1):
        total += term
        term = term * j / (k + 1)
    return 1 / total
