from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import gmpy2
from gmpy2 import mpfr, mpq

from app.models.interval import (
    Precision,
    bound_from_rational,
    bound_from_text,
    precision_for,
    to_rational,
)
from app.models.orbit import CriticalNeighbourhood, ParamSegment


@dataclass(frozen=True)
class EngineParams:
    """RunConfig resolved to p-bit bounds; what worker processes receive."""

    prec: Precision
    nbhd: CriticalNeighbourhood
    omega: ParamSegment
    n0: int
    n_max: int
    s: int
    # w * |omega|: pieces narrower than this are not requeued
    min_width: mpfr
    n_min: Optional[int] = None

    @classmethod
    def from_config(cls, config) -> "EngineParams":
        prec = precision_for(config.p)
        lo = bound_from_text(str(config.omega[0]), prec)
        hi = bound_from_text(str(config.omega[1]), prec)
        omega = ParamSegment(lo, hi)
        delta = bound_from_text(str(config.delta), prec)
        w = Fraction(config.w)
        w = mpq(w.numerator, w.denominator)
        min_width = bound_from_rational(
            w * (to_rational(hi) - to_rational(lo)), prec, gmpy2.RoundToNearest
        )
        return cls(
            prec=prec,
            nbhd=CriticalNeighbourhood(delta, prec),
            omega=omega,
            n0=config.n0,
            n_max=config.n_max,
            s=config.s,
            min_width=min_width,
            n_min=config.n_min,
        )

    def is_too_small(self, segment: ParamSegment) -> bool:
        return self.prec.near.sub(segment.hi, segment.lo) < self.min_width
