"""
Arbitrary-precision bounds with directed rounding, and the interval
arithmetic built on them.

Every bound is a gmpy2 ``mpfr``. Rounding is never taken from the
thread-local gmpy2 context: each operation goes through one of the three
contexts held by a ``Precision`` (toward -inf, toward +inf, to nearest), so
the rounding direction is a parameter of the call.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Tuple, Union

import gmpy2
from gmpy2 import mpfr, mpq

from app.core.errors import DomainError

MPBound = mpfr
Rational = Union[int, Fraction, "mpq"]

ZERO = mpfr(0)
ONE = mpfr(1)
TWO = mpfr(2)


@dataclass(frozen=True)
class Precision:
    """Rounding contexts for one significand width ``bits``."""

    bits: int
    down: gmpy2.context = field(init=False, repr=False, compare=False)
    up: gmpy2.context = field(init=False, repr=False, compare=False)
    near: gmpy2.context = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.bits < 2:
            raise DomainError(f"precision must be at least 2 bits, got {self.bits}")
        for name, mode in (
            ("down", gmpy2.RoundDown),
            ("up", gmpy2.RoundUp),
            ("near", gmpy2.RoundToNearest),
        ):
            object.__setattr__(
                self, name, gmpy2.context(precision=self.bits, round=mode)
            )

    def __reduce__(self):
        # contexts do not pickle; rebuild from the width in worker processes
        return (precision_for, (self.bits,))


@lru_cache(maxsize=None)
def precision_for(bits: int) -> Precision:
    return Precision(bits)


def bound_from_rational(value: Rational, prec: Precision, rounding=gmpy2.RoundToNearest) -> mpfr:
    """Round an exact rational to a ``prec``-bit bound in the given direction."""
    if isinstance(value, Fraction):
        value = mpq(value.numerator, value.denominator)
    with gmpy2.context(precision=prec.bits, round=rounding):
        return mpfr(value)


def bound_from_text(text: str, prec: Precision, rounding=gmpy2.RoundToZero) -> mpfr:
    """Parse a decimal literal (``"1e-3"``, ``"1.4"``) into a ``prec``-bit bound."""
    with gmpy2.context(precision=prec.bits, round=rounding):
        value = mpfr(str(text))
    if gmpy2.is_nan(value):
        raise DomainError(f"not a number: {text!r}")
    return value


def to_rational(x: mpfr) -> mpq:
    """Exact value of a finite bound."""
    if not gmpy2.is_finite(x):
        raise DomainError(f"non-finite bound has no exact rational value: {x}")
    num, den = x.as_integer_ratio()
    return mpq(num, den)


@dataclass(frozen=True)
class MPInterval:
    lo: mpfr
    hi: mpfr

    def __post_init__(self) -> None:
        if gmpy2.is_nan(self.lo) or gmpy2.is_nan(self.hi):
            raise DomainError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def thin(cls, value: mpfr) -> "MPInterval":
        return cls(value, value)

    @property
    def is_thin(self) -> bool:
        return self.lo == self.hi

    @property
    def is_finite(self) -> bool:
        return gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def subset_of(self, other: "MPInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi


ENTIRE = MPInterval(-gmpy2.inf(), gmpy2.inf())
UNIT = MPInterval(ONE, ONE)


def _outward(lo: mpfr, hi: mpfr) -> MPInterval:
    # 0 * inf and inf - inf produce NaN; the only sound enclosure left is the line
    if gmpy2.is_nan(lo) or gmpy2.is_nan(hi):
        return ENTIRE
    return MPInterval(lo, hi)


def ival_add(x: MPInterval, y: MPInterval, prec: Precision) -> MPInterval:
    return _outward(prec.down.add(x.lo, y.lo), prec.up.add(x.hi, y.hi))


def ival_sub(x: MPInterval, y: MPInterval, prec: Precision) -> MPInterval:
    return _outward(prec.down.sub(x.lo, y.hi), prec.up.sub(x.hi, y.lo))


def ival_sqr(x: MPInterval, prec: Precision) -> MPInterval:
    if x.lo >= 0:
        return _outward(prec.down.mul(x.lo, x.lo), prec.up.mul(x.hi, x.hi))
    if x.hi <= 0:
        return _outward(prec.down.mul(x.hi, x.hi), prec.up.mul(x.lo, x.lo))
    # unary minus would round to the thread context, so compare squares instead
    return _outward(ZERO, max(prec.up.mul(x.lo, x.lo), prec.up.mul(x.hi, x.hi)))


def ival_mul(x: MPInterval, y: MPInterval, prec: Precision) -> MPInterval:
    down, up = prec.down, prec.up
    pairs = ((x.lo, y.lo), (x.lo, y.hi), (x.hi, y.lo), (x.hi, y.hi))
    lows = [down.mul(a, b) for a, b in pairs]
    highs = [up.mul(a, b) for a, b in pairs]
    if any(gmpy2.is_nan(v) for v in lows + highs):
        return ENTIRE
    return MPInterval(min(lows), max(highs))


def negate(x: mpfr, prec: Precision) -> mpfr:
    """Exact negation at precision ``prec``."""
    return prec.near.sub(ZERO, x)


def ival_scale2(x: MPInterval, prec: Precision) -> MPInterval:
    """Multiply by two; exact unless the exponent overflows."""
    return _outward(prec.down.mul(x.lo, TWO), prec.up.mul(x.hi, TWO))


def hull(x: MPInterval, y: MPInterval) -> MPInterval:
    return MPInterval(min(x.lo, y.lo), max(x.hi, y.hi))


def width_bounds(x: MPInterval, prec: Precision) -> Tuple[mpfr, mpfr]:
    lower = prec.down.sub(x.hi, x.lo)
    upper = prec.up.sub(x.hi, x.lo)
    assert lower >= 0, f"negative width lower bound {lower}"
    return lower, upper


def sum_measure(widths: Iterable[Tuple[mpfr, mpfr]], prec: Precision) -> Tuple[mpfr, mpfr]:
    lower, upper = ZERO, ZERO
    for w_lo, w_hi in widths:
        lower = prec.down.add(lower, w_lo)
        upper = prec.up.add(upper, w_hi)
    return lower, upper


def sqrt_up(x: mpfr, prec: Precision) -> mpfr:
    if x < 0:
        raise DomainError(f"sqrt_up of negative bound {x}")
    return prec.up.sqrt(x)


def midpoint(lo: mpfr, hi: mpfr, prec: Precision) -> Optional[mpfr]:
    """Round-to-nearest midpoint, or None when no bound lies strictly inside."""
    # halving is exact, so this is round((lo + hi) / 2)
    mid = prec.near.div(prec.near.add(lo, hi), TWO)
    if lo < mid < hi:
        return mid
    return None
