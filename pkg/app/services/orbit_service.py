"""
Certified iteration of the critical orbit c_n(a) = f_a^n(a) of the quadratic
family f_a(x) = a - x^2 over a parameter segment.

The state keeps thin-parameter enclosures of the orbit at both segment
endpoints, an enclosure of the parameter-derivative c_n' over the whole
segment and the resulting image hull. As long as c_n' provably keeps one sign,
the image of the segment is the interval spanned by the endpoint orbits.
"""

from typing import Optional, Tuple, Union

from gmpy2 import mpfr

from app.models.interval import (
    UNIT,
    MPInterval,
    Precision,
    hull,
    ival_mul,
    ival_scale2,
    ival_sqr,
    ival_sub,
    width_bounds,
)
from app.models.orbit import (
    CriticalNeighbourhood,
    DeltaRelation,
    MonotonicityFailure,
    OrbitState,
    ParamSegment,
    PrecisionLoss,
)

StepOutcome = Union[OrbitState, MonotonicityFailure, PrecisionLoss]


def orbit_init(segment: ParamSegment) -> OrbitState:
    # c_0(a) = a
    return OrbitState(
        segment=segment,
        n=0,
        e_lo=MPInterval.thin(segment.lo),
        e_hi=MPInterval.thin(segment.hi),
        d_enc=UNIT,
        orientation=1,
        c_hull=MPInterval(segment.lo, segment.hi),
    )


def _map_step(a: MPInterval, x: MPInterval, prec: Precision) -> MPInterval:
    return ival_sub(a, ival_sqr(x, prec), prec)


def orbit_step(
    state: OrbitState, nbhd: CriticalNeighbourhood, prec: Precision
) -> StepOutcome:
    """
    Advance the endpoint enclosures and the derivative enclosure by one iterate.

    Args:
        state: Current orbit state at iterate n
        nbhd: Critical neighbourhood, for the precision-loss threshold
        prec: Working precision

    Returns:
        The state at n+1, or a MonotonicityFailure or PrecisionLoss naming the
        iterate that could not be certified
    """
    n = state.n + 1
    seg = state.segment

    e_lo = _map_step(MPInterval.thin(seg.lo), state.e_lo, prec)
    e_hi = _map_step(MPInterval.thin(seg.hi), state.e_hi, prec)
    # c_{n+1}' = 1 - 2 c_n c_n', with c_n enclosed by the monotone hull
    d_enc = ival_sub(UNIT, ival_scale2(ival_mul(state.c_hull, state.d_enc, prec), prec), prec)

    if not (e_lo.is_finite and e_hi.is_finite and d_enc.is_finite):
        return PrecisionLoss(n, "non-finite enclosure")
    if d_enc.contains_zero():
        return MonotonicityFailure(n, d_enc)
    if (
        width_bounds(e_lo, prec)[1] > nbhd.loss_threshold
        or width_bounds(e_hi, prec)[1] > nbhd.loss_threshold
    ):
        return PrecisionLoss(n, "endpoint enclosure wider than delta/10")

    orientation = 1 if d_enc.lo > 0 else -1
    new_state = OrbitState(
        segment=seg,
        n=n,
        e_lo=e_lo,
        e_hi=e_hi,
        d_enc=d_enc,
        orientation=orientation,
        c_hull=hull(e_lo, e_hi),
    )
    if seg.lo < seg.hi and monotone_width(new_state, prec)[0] <= 0:
        return PrecisionLoss(n, "endpoint enclosures overlap")
    return new_state


def delta_hit(state: OrbitState, nbhd: CriticalNeighbourhood) -> DeltaRelation:
    # Δ is open, so touching ±delta is still disjoint
    if state.c_hull.lo >= nbhd.delta or state.c_hull.hi <= nbhd.neg_delta:
        return DeltaRelation.DISJOINT
    return DeltaRelation.HIT


def monotone_width(state: OrbitState, prec: Precision) -> Tuple[mpfr, mpfr]:
    """Rigorous (lower, upper) bounds on |c_n(hi) - c_n(lo)|."""
    if state.orientation > 0:
        lower = prec.down.sub(state.e_hi.lo, state.e_lo.hi)
    else:
        lower = prec.down.sub(state.e_lo.lo, state.e_hi.hi)
    upper = width_bounds(state.c_hull, prec)[1]
    return lower, upper


def escape_check(
    state: OrbitState, nbhd: CriticalNeighbourhood, n0: int, prec: Precision
) -> bool:
    """Certified when n >= n0 and the image is provably at least sqrt(delta) wide."""
    if state.n < n0:
        return False
    lower = monotone_width(state, prec)[0]
    if lower <= 0:
        return False
    return lower >= nbhd.sqrt_delta


def point_enclosure(a: mpfr, n: int, prec: Precision) -> Optional[MPInterval]:
    """Enclosure of c_n(a) for a single parameter, or None if it blows up."""
    param = MPInterval.thin(a)
    x = param
    for _ in range(n):
        x = _map_step(param, x, prec)
        if not x.is_finite:
            return None
    return x


def orbit_trajectory(
    segment: ParamSegment,
    nbhd: CriticalNeighbourhood,
    prec: Precision,
    n_max: int,
) -> Tuple[list[OrbitState], Optional[Union[MonotonicityFailure, PrecisionLoss]]]:
    """All certified states from n = 0 up to n_max or the first failure."""
    states = [orbit_init(segment)]
    while states[-1].n < n_max:
        outcome = orbit_step(states[-1], nbhd, prec)
        if not isinstance(outcome, OrbitState):
            return states, outcome
        states.append(outcome)
    return states, None
