"""
Queue-driven construction of parameter segments with a certified escape time.

Each dequeued segment is iterated from n = 0 until its image meets Δ, the
parameter-derivative loses its certified sign, enclosures lose precision or
n exceeds nMax. Segments whose image hits Δ are either accepted (escape time
found) or chopped around the Δ-preimage and their side pieces requeued.
"""

import time
from collections import deque
from functools import partial
from typing import Callable, NamedTuple, Optional, Tuple

from app.core.config import settings
from app.core.errors import IndivisibleSegment
from app.models.engine import EngineParams
from app.models.interval import (
    MPInterval,
    Precision,
    bound_from_rational,
    midpoint,
    sum_measure,
    to_rational,
    width_bounds,
)
from app.models.orbit import (
    CriticalNeighbourhood,
    DeltaRelation,
    MonotonicityFailure,
    OrbitState,
    ParamSegment,
)
from app.schemas.run_schema import (
    ClassifiedSegment,
    Measure,
    RunConfig,
    RunResult,
    StopReason,
    Verdict,
)
from app.services.orbit_service import (
    delta_hit,
    escape_check,
    monotone_width,
    orbit_init,
    orbit_step,
    point_enclosure,
)
from app.utils.logger import get_logger
from app.utils.parallel import OrderedPool
from app.utils.serialization import bound_to_hex

logger = get_logger()


class ChopResult(NamedTuple):
    left: Optional[ParamSegment]
    excluded: ParamSegment
    right: Optional[ParamSegment]


class SegmentOutcome(NamedTuple):
    classified: list[ClassifiedSegment]
    requeue: list[ParamSegment]


def seed_queue(omega: ParamSegment, u: int, prec: Precision) -> list[ParamSegment]:
    """
    Split omega into u pieces of (nearly) equal width with p-bit endpoints.

    Args:
        omega: Parameter range to cover
        u: Number of initial pieces
        prec: Precision of the interior endpoints

    Returns:
        Adjacent segments tiling omega exactly, in ascending order
    """
    lo_q, hi_q = to_rational(omega.lo), to_rational(omega.hi)
    points = [omega.lo]
    for k in range(1, u):
        points.append(bound_from_rational(lo_q + (hi_q - lo_q) * k / u, prec))
    points.append(omega.hi)
    for left, right in zip(points, points[1:]):
        if not left < right:
            raise IndivisibleSegment(
                f"cannot split [{omega.lo}, {omega.hi}] into {u} pieces at {prec.bits} bits"
            )
    return [
        ParamSegment(left, right, omega.certified_iter)
        for left, right in zip(points, points[1:])
    ]


def split_half(segment: ParamSegment, prec: Precision) -> Tuple[ParamSegment, ParamSegment]:
    mid = midpoint(segment.lo, segment.hi, prec)
    if mid is None:
        raise IndivisibleSegment(f"segment [{segment.lo}, {segment.hi}] is at most 1 ulp wide")
    return (
        ParamSegment(segment.lo, mid, segment.certified_iter),
        ParamSegment(mid, segment.hi, segment.certified_iter),
    )


Predicate = Callable[[MPInterval], bool]


def _side_predicates(nbhd: CriticalNeighbourhood) -> Tuple[Predicate, Predicate, Predicate, Predicate]:
    def below(e: MPInterval) -> bool:
        return e.hi <= nbhd.neg_delta

    def above(e: MPInterval) -> bool:
        return e.lo >= nbhd.delta

    def not_below(e: MPInterval) -> bool:
        return e.lo > nbhd.neg_delta

    def not_above(e: MPInterval) -> bool:
        return e.hi < nbhd.delta

    return below, not_below, above, not_above


def _refine_cut(
    good,
    bad,
    is_good: Predicate,
    is_bad: Predicate,
    n: int,
    steps: int,
    prec: Precision,
):
    """Bisect towards the Δ boundary, keeping ``good`` proven outside Δ."""
    for _ in range(steps):
        mid = midpoint(min(good, bad), max(good, bad), prec)
        if mid is None:
            break
        enclosure = point_enclosure(mid, n, prec)
        if enclosure is None:
            break
        if is_good(enclosure):
            good = mid
        elif is_bad(enclosure):
            bad = mid
        else:
            # enclosure straddles the threshold: keep the conservative bracket
            break
    return good


def _certified_cut(cut, is_good: Predicate, n: int, prec: Precision) -> bool:
    enclosure = point_enclosure(cut, n, prec)
    return enclosure is not None and is_good(enclosure)


def chop_at_delta(
    state: OrbitState, nbhd: CriticalNeighbourhood, s: int, prec: Precision
) -> ChopResult:
    """
    Cut an outer enclosure of the Δ-preimage of c_N out of the segment.

    Args:
        state: Orbit state whose hull meets Δ
        nbhd: Critical neighbourhood
        s: Bisection steps spent refining each cut point
        prec: Working precision

    Returns:
        ChopResult with the excluded middle and the surviving left and right
        pieces (either may be None)
    """
    seg, n = state.segment, state.n
    below, not_below, above, not_above = _side_predicates(nbhd)
    if state.orientation > 0:
        left_good, left_bad, right_good, right_bad = below, not_below, above, not_above
    else:
        left_good, left_bad, right_good, right_bad = above, not_above, below, not_below

    cut_lo = seg.lo
    if left_good(state.e_lo):
        cut = _refine_cut(seg.lo, seg.hi, left_good, left_bad, n, s, prec)
        if cut > seg.lo and _certified_cut(cut, left_good, n, prec):
            cut_lo = cut

    cut_hi = seg.hi
    if right_good(state.e_hi):
        cut = _refine_cut(seg.hi, seg.lo, right_good, right_bad, n, s, prec)
        if cut < seg.hi and _certified_cut(cut, right_good, n, prec):
            cut_hi = cut

    if not cut_lo < cut_hi:
        return ChopResult(None, seg, None)

    left = ParamSegment(seg.lo, cut_lo, seg.certified_iter) if cut_lo > seg.lo else None
    right = ParamSegment(cut_hi, seg.hi, seg.certified_iter) if cut_hi < seg.hi else None
    return ChopResult(left, ParamSegment(cut_lo, cut_hi, seg.certified_iter), right)


def _chop_outcome(state: OrbitState, params: EngineParams) -> SegmentOutcome:
    n = state.n
    chopped = chop_at_delta(state, params.nbhd, params.s, params.prec)
    classified = [
        ClassifiedSegment.of(chopped.excluded, Verdict.DELTA_EXCLUDED, hit_iter=n)
    ]
    requeue: list[ParamSegment] = []
    for side in (chopped.left, chopped.right):
        if side is None:
            continue
        # the side piece is certified Δ-free through iterate n
        side = side.with_certified(n)
        if params.is_too_small(side):
            classified.append(ClassifiedSegment.of(side, Verdict.TOO_SMALL, hit_iter=n))
        else:
            requeue.append(side)
    return SegmentOutcome(classified, requeue)


def _split_outcome(
    segment: ParamSegment, certified: int, verdict: Verdict, params: EngineParams
) -> SegmentOutcome:
    try:
        halves = split_half(segment, params.prec)
    except IndivisibleSegment:
        return SegmentOutcome([ClassifiedSegment.of(segment, Verdict.PRECISION_LOSS)], [])
    if any(params.is_too_small(half) for half in halves):
        return SegmentOutcome([ClassifiedSegment.of(segment, verdict)], [])
    return SegmentOutcome([], [half.with_certified(certified) for half in halves])


def process_segment(segment: ParamSegment, params: EngineParams) -> SegmentOutcome:
    """One main-loop iteration for a dequeued segment. Pure."""
    nbhd, prec = params.nbhd, params.prec
    state = orbit_init(segment)
    while True:
        if delta_hit(state, nbhd) is DeltaRelation.HIT:
            if escape_check(state, nbhd, params.n0, prec):
                lower, upper = monotone_width(state, prec)
                record = ClassifiedSegment.of(
                    segment,
                    Verdict.ESCAPED,
                    escape_time=state.n,
                    width_at_escape=Measure(lower=lower, upper=upper),
                    hit_iter=state.n,
                )
                return SegmentOutcome([record], [])
            return _chop_outcome(state, params)
        if state.n >= params.n_max:
            return SegmentOutcome([ClassifiedSegment.of(segment, Verdict.MAX_ITER)], [])
        outcome = orbit_step(state, nbhd, prec)
        if isinstance(outcome, OrbitState):
            state = outcome
        elif isinstance(outcome, MonotonicityFailure):
            return _split_outcome(segment, outcome.n - 1, Verdict.NO_SIGN_MIN_WIDTH, params)
        else:
            return _split_outcome(segment, outcome.n - 1, Verdict.PRECISION_LOSS, params)


def replay_escape(record: ClassifiedSegment, params: EngineParams) -> bool:
    """Independently re-certify an ESCAPED segment from scratch."""
    if record.verdict is not Verdict.ESCAPED or record.escape_time is None:
        return False
    nbhd, prec = params.nbhd, params.prec
    state = orbit_init(record.segment)
    while state.n < record.escape_time:
        if delta_hit(state, nbhd) is DeltaRelation.HIT:
            return False
        outcome = orbit_step(state, nbhd, prec)
        if not isinstance(outcome, OrbitState):
            return False
        state = outcome
    return escape_check(state, nbhd, params.n0, prec)


def verify_tiling(classified: list[ClassifiedSegment], omega: ParamSegment) -> bool:
    """Sorted output segments must chain exactly from omega.lo to omega.hi."""
    if not classified:
        return False
    ordered = sorted(classified, key=lambda c: c.lo)
    if ordered[0].lo != omega.lo or ordered[-1].hi != omega.hi:
        return False
    return all(a.hi == b.lo for a, b in zip(ordered, ordered[1:]))


class _QueueRun:
    """Mutable bookkeeping of one run_escape call."""

    def __init__(self, config: RunConfig, params: EngineParams) -> None:
        self.config = config
        self.params = params
        self.queue: deque[ParamSegment] = deque(seed_queue(params.omega, config.u, params.prec))
        self.classified: list[ClassifiedSegment] = []
        self.processed = 0
        self.max_queue_depth = len(self.queue)
        self.below_min = sum(1 for seg in self.queue if self._below_min(seg))

    def _below_min(self, segment: ParamSegment) -> bool:
        return self.config.n_min is not None and segment.certified_iter < self.config.n_min

    def stop_reason(self) -> Optional[StopReason]:
        if self.config.i_max is not None and self.processed >= self.config.i_max:
            return StopReason.I_MAX
        if self.config.queue_cap is not None and len(self.queue) > self.config.queue_cap:
            return StopReason.QUEUE_CAP
        if self.config.n_min is not None and self.below_min == 0:
            return StopReason.N_MIN
        return None

    def merge(self, outcome: SegmentOutcome) -> None:
        segment = self.queue.popleft()
        if self._below_min(segment):
            self.below_min -= 1
        self.classified.extend(outcome.classified)
        for piece in outcome.requeue:
            self.queue.append(piece)
            if self._below_min(piece):
                self.below_min += 1
        self.processed += 1
        self.max_queue_depth = max(self.max_queue_depth, len(self.queue))
        if self.processed % settings.LOG_EVERY == 0:
            logger.info(
                "processed %d segments, queue depth %d, classified %d",
                self.processed,
                len(self.queue),
                len(self.classified),
            )

    def drain(self, pool: OrderedPool) -> StopReason:
        work = partial(process_segment, params=self.params)
        while self.queue:
            reason = self.stop_reason()
            if reason is not None:
                return reason
            batch = [self.queue[i] for i in range(min(pool.batch_size, len(self.queue)))]
            for index, outcome in enumerate(pool.map(work, batch)):
                if index > 0:
                    reason = self.stop_reason()
                    if reason is not None:
                        return reason
                self.merge(outcome)
        return StopReason.COMPLETED


def measures_by_verdict(
    classified: list[ClassifiedSegment], prec: Precision
) -> Tuple[dict[Verdict, Measure], dict[Verdict, int]]:
    """Rigorous per-verdict measure, summed in ascending segment order."""
    measures: dict[Verdict, Measure] = {}
    counts: dict[Verdict, int] = {}
    for verdict in Verdict:
        members = [c for c in classified if c.verdict == verdict]
        lower, upper = sum_measure(
            (width_bounds(MPInterval(c.lo, c.hi), prec) for c in members), prec
        )
        measures[verdict] = Measure(lower=lower, upper=upper)
        counts[verdict] = len(members)
    return measures, counts


def run_escape(config: RunConfig) -> RunResult:
    """
    Classify every parameter in omega by draining the segment queue.

    Args:
        config: Validated run configuration

    Returns:
        RunResult with the classified segments in ascending order, per-verdict
        measures and the reason the queue stopped
    """
    params = EngineParams.from_config(config)
    started = time.perf_counter()
    logger.info("escape run started: %s", config.echo())

    run = _QueueRun(config, params)
    with OrderedPool(config.threads) as pool:
        stop_reason = run.drain(pool)
    if stop_reason is not StopReason.COMPLETED:
        logger.info(
            "early stop (%s) after %d segments, %d left in queue",
            stop_reason.value,
            run.processed,
            len(run.queue),
        )

    classified = run.classified + [
        ClassifiedSegment.of(seg, Verdict.QUEUE_LEFTOVER) for seg in run.queue
    ]
    classified.sort(key=lambda c: c.lo)
    measures, counts = measures_by_verdict(classified, params.prec)
    wallclock = time.perf_counter() - started

    logger.info(
        "escape run finished: %d segments processed, %d escaped, %.1f s",
        run.processed,
        counts[Verdict.ESCAPED],
        wallclock,
    )
    return RunResult(
        config=config,
        classified=classified,
        measures=measures,
        counts=counts,
        processed=run.processed,
        max_queue_depth=run.max_queue_depth,
        stop_reason=stop_reason,
        wallclock_seconds=wallclock,
        effective={
            "omega_lo": bound_to_hex(params.omega.lo),
            "omega_hi": bound_to_hex(params.omega.hi),
            "delta": bound_to_hex(params.nbhd.delta),
            "sqrt_delta_up": bound_to_hex(params.nbhd.sqrt_delta),
            "min_width": bound_to_hex(params.min_width),
        },
    )


def result_from_classified(config: RunConfig, classified: list[ClassifiedSegment]) -> RunResult:
    """RunResult rebuilt from segments read back from a results file."""
    params = EngineParams.from_config(config)
    classified = sorted(classified, key=lambda c: c.lo)
    measures, counts = measures_by_verdict(classified, params.prec)
    return RunResult(
        config=config,
        classified=classified,
        measures=measures,
        counts=counts,
        processed=0,
        max_queue_depth=0,
    )
