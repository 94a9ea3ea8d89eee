from dataclasses import dataclass, field, replace
from enum import Enum

import gmpy2
from gmpy2 import mpfr

from app.core.errors import DomainError
from app.models.interval import MPInterval, Precision, negate, sqrt_up


@dataclass(frozen=True)
class ParamSegment:
    """Parameter subinterval [lo, hi] with exactly representable endpoints.

    ``certified_iter`` counts the iterates already certified Δ-free before
    the segment was (re)queued. Engine segments always have lo < hi; a thin
    segment (lo == hi) is accepted so that single parameters can be iterated.
    """

    lo: mpfr
    hi: mpfr
    certified_iter: int = 0

    def __post_init__(self) -> None:
        if not (gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)):
            raise DomainError("segment endpoints must be finite")
        if self.lo > self.hi:
            raise DomainError(f"segment endpoints out of order: [{self.lo}, {self.hi}]")

    def with_certified(self, n: int) -> "ParamSegment":
        return replace(self, certified_iter=n)

    def as_interval(self) -> MPInterval:
        return MPInterval(self.lo, self.hi)


@dataclass(frozen=True)
class CriticalNeighbourhood:
    """Δ = (-delta, delta) together with the derived thresholds of a run."""

    delta: mpfr
    prec: Precision
    neg_delta: mpfr = field(init=False, repr=False)
    sqrt_delta: mpfr = field(init=False, repr=False)
    loss_threshold: mpfr = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (gmpy2.is_finite(self.delta) and self.delta > 0):
            raise DomainError(f"delta must be positive and finite, got {self.delta}")
        object.__setattr__(self, "neg_delta", negate(self.delta, self.prec))
        object.__setattr__(self, "sqrt_delta", sqrt_up(self.delta, self.prec))
        # enclosures this wide make the Δ test meaningless
        object.__setattr__(
            self, "loss_threshold", self.prec.down.div(self.delta, mpfr(10))
        )


class DeltaRelation(str, Enum):
    DISJOINT = "DISJOINT"
    HIT = "HIT"


@dataclass(frozen=True)
class OrbitState:
    segment: ParamSegment
    n: int
    e_lo: MPInterval
    e_hi: MPInterval
    d_enc: MPInterval
    orientation: int
    c_hull: MPInterval


@dataclass(frozen=True)
class MonotonicityFailure:
    """c_n' could not be proven to have constant sign at iterate ``n``."""

    n: int
    d_enc: MPInterval


@dataclass(frozen=True)
class PrecisionLoss:
    """Enclosures at iterate ``n`` grew too wide (or non-finite) to be useful."""

    n: int
    reason: str
