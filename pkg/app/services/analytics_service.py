"""
Aggregate statistics over completed run and survey outputs.

Every measure is a rigorous (lower, upper) pair summed with directed
rounding in ascending segment order, so results do not depend on how the
records were produced or read back.
"""

from decimal import Decimal
from typing import Callable, Iterable, Optional, Sequence, Tuple, TypeVar, Union

import gmpy2
import numpy as np
from gmpy2 import mpfr

from app.core.errors import ConfigurationError
from app.models.engine import EngineParams
from app.models.interval import (
    ZERO,
    MPInterval,
    Precision,
    bound_from_text,
    precision_for,
    sum_measure,
    width_bounds,
)
from app.schemas.analytics_schema import (
    CurvePoint,
    HistogramSlot,
    LinearFit,
    MeasureCurve,
    PieSlice,
    SubrangeSummary,
    WidthHistogram,
)
from app.schemas.run_schema import ClassifiedSegment, Measure, RunConfig, RunResult, Verdict
from app.schemas.survey_schema import SurveyOutcome, SurveyRecord

Record = Union[SurveyRecord, ClassifiedSegment]
T = TypeVar("T")

DEFAULT_SLOTS = 80
PIE_MERGE_PERCENT = 2
# decade boundaries of the pie buckets, widest first
PIE_DECADES = list(range(-1, -11, -1))
HUNDRED = mpfr(100)


def _sorted(records: Iterable[T]) -> list[T]:
    return sorted(records, key=lambda r: r.lo)


def _total(records: Iterable[Record], prec: Precision) -> Tuple[mpfr, mpfr]:
    return sum_measure(
        (width_bounds(MPInterval(r.lo, r.hi), prec) for r in _sorted(records)), prec
    )


def hit_key(record: Record) -> Optional[int]:
    """firstHit for survey records, escapeTime for escaped run segments."""
    if isinstance(record, SurveyRecord):
        return record.first_hit if record.outcome is SurveyOutcome.HIT else None
    return record.escape_time if record.verdict is Verdict.ESCAPED else None


def hit_width(record: Record) -> Optional[Measure]:
    if isinstance(record, SurveyRecord):
        return record.width_at_hit
    return record.width_at_escape


def _curve(
    records: Sequence[Record],
    thresholds: Sequence,
    selects: Callable[[Record, object], bool],
    kind: str,
    prec: Precision,
) -> MeasureCurve:
    ordered = _sorted(records)
    points = []
    for threshold in thresholds:
        members = [r for r in ordered if selects(r, threshold)]
        lower, upper = _total(members, prec)
        points.append(
            CurvePoint(threshold=Decimal(str(threshold)), lower=lower, upper=upper, count=len(members))
        )
    return MeasureCurve(kind=kind, points=points)


def measure_at_least_n(
    records: Sequence[Record], n_values: Sequence[int], prec: Precision
) -> MeasureCurve:
    """
    Measure of segments first hitting Δ (or escaping) at iterate N or later.

    Args:
        records: Survey records or ESCAPED run segments
        n_values: Thresholds N, each giving one curve point
        prec: Precision used to sum widths

    Returns:
        MeasureCurve with rigorous lower and upper bounds per N
    """

    def selects(record: Record, n: int) -> bool:
        key = hit_key(record)
        return key is not None and key >= n

    return _curve(records, sorted(n_values), selects, "at_least", prec)


def escape_time_curve(result: RunResult, n_values: Sequence[int]) -> MeasureCurve:
    prec = precision_for(result.config.p)
    return measure_at_least_n(result.of_verdict(Verdict.ESCAPED), n_values, prec)


def _threshold_bound(threshold) -> mpfr:
    # thresholds compare against rigorous lower bounds; round the threshold up
    return bound_from_text(str(threshold), precision_for(64), gmpy2.RoundUp)


def measure_width_at_least(
    records: Sequence[Record], thresholds: Sequence[Decimal], prec: Precision
) -> MeasureCurve:
    """Measure of segments whose image width at the hit is provably >= t."""
    bounds = {t: _threshold_bound(t) for t in thresholds}

    def selects(record: Record, t) -> bool:
        width = hit_width(record)
        return width is not None and width.lower >= bounds[t]

    return _curve(records, sorted(thresholds), selects, "at_least", prec)


def measure_width_below(
    pplus: Sequence[ClassifiedSegment], thresholds: Sequence[Decimal], prec: Precision
) -> MeasureCurve:
    """ESCAPED measure carried by segments whose parameter width is below t."""
    bounds = {t: _threshold_bound(t) for t in thresholds}

    def selects(record: ClassifiedSegment, t) -> bool:
        return width_bounds(MPInterval(record.lo, record.hi), prec)[1] < bounds[t]

    return _curve(pplus, sorted(thresholds), selects, "below", prec)


def slot_edges(omega_width: float, w: float, slot_count: int = DEFAULT_SLOTS) -> np.ndarray:
    """Edges W * r**k for k = 0..slot_count, with W = w*|omega|."""
    base = w * omega_width
    return base * np.logspace(0, 1, slot_count + 1, base=omega_width / base)


def width_slots(
    pplus: Sequence[ClassifiedSegment],
    omega_width: float,
    w: float,
    prec: Precision,
    slot_count: int = DEFAULT_SLOTS,
) -> WidthHistogram:
    """
    Bin ESCAPED segments into logarithmic width slots.

    Args:
        pplus: ESCAPED segments
        omega_width: Width of the parameter range
        w: Minimum width fraction of the run
        prec: Precision used to sum widths
        slot_count: Number of slots between w*|omega| and |omega|

    Returns:
        WidthHistogram with count and measure per slot
    """
    edges = slot_edges(omega_width, w, slot_count)
    ordered = _sorted(pplus)
    widths = np.array([float(gmpy2.sub(r.hi, r.lo)) for r in ordered], dtype=float)
    if len(widths):
        logs = np.log(widths / edges[0]) / np.log(edges[-1] / edges[0]) * slot_count
        indices = np.clip(np.floor(logs).astype(int), 0, slot_count - 1)
    else:
        indices = np.array([], dtype=int)

    slots = []
    for k in range(slot_count):
        members = [r for r, index in zip(ordered, indices) if index == k]
        lower, upper = _total(members, prec)
        slots.append(
            HistogramSlot(
                index=k,
                width_from=float(edges[k]),
                width_to=float(edges[k + 1]),
                count=len(members),
                lower=lower,
                upper=upper,
            )
        )
    return WidthHistogram(slots=slots)


def _pie(pplus: Sequence[ClassifiedSegment], total_upper: mpfr, prec: Precision) -> list[PieSlice]:
    buckets: dict[int, list[ClassifiedSegment]] = {e: [] for e in PIE_DECADES}
    for record in pplus:
        width = float(gmpy2.sub(record.hi, record.lo))
        exponent = int(np.floor(np.log10(width))) if width > 0 else PIE_DECADES[-1]
        buckets[min(max(exponent, PIE_DECADES[-1]), PIE_DECADES[0])].append(record)

    slices = []
    for exponent in PIE_DECADES:
        lower, upper = _total(buckets[exponent], prec)
        label = f"[1e{exponent}, 1e{exponent + 1})"
        slices.append(PieSlice(label=label, count=len(buckets[exponent]), lower=lower, upper=upper))

    # narrow buckets under the merge share fold into the last bucket that reaches it
    if total_upper <= 0:
        return slices
    threshold = prec.down.div(prec.down.mul(total_upper, mpfr(PIE_MERGE_PERCENT)), HUNDRED)
    keep = [i for i, s in enumerate(slices) if s.upper >= threshold]
    if not keep:
        return slices
    last = keep[-1]
    merged = slices[last:]
    lower, upper = ZERO, ZERO
    for piece in merged:
        lower = prec.down.add(lower, piece.lower)
        upper = prec.up.add(upper, piece.upper)
    joined = PieSlice(
        label=f"< 1e{PIE_DECADES[last] + 1}" if len(merged) > 1 else merged[0].label,
        count=sum(piece.count for piece in merged),
        lower=lower,
        upper=upper,
    )
    return slices[:last] + [joined]


def _comparable(config: RunConfig) -> dict[str, object]:
    data = config.model_dump()
    for name in ("omega", "threads", "i_max", "queue_cap"):
        data.pop(name)
    return data


def _summarize(
    pplus: Sequence[ClassifiedSegment], lo: mpfr, hi: mpfr, prec: Precision
) -> SubrangeSummary:
    lower, upper = _total(pplus, prec)
    range_lower, range_upper = width_bounds(MPInterval(lo, hi), prec)
    mu = Measure(
        lower=prec.down.div(prec.down.mul(lower, HUNDRED), range_upper),
        upper=prec.up.div(prec.up.mul(upper, HUNDRED), range_lower),
    )
    return SubrangeSummary(
        range_lo=lo,
        range_hi=hi,
        escaped=Measure(lower=lower, upper=upper),
        mu_percent=mu,
        pie=_pie(pplus, upper, prec),
    )


def subrange_summary(results: Sequence[RunResult]) -> list[SubrangeSummary]:
    """μ percentages and width pies, one per sub-range run."""
    if not results:
        return []
    reference = _comparable(results[0].config)
    for result in results[1:]:
        if _comparable(result.config) != reference:
            raise ConfigurationError("sub-range runs must share every setting except omega")

    summaries = []
    for result in results:
        params = EngineParams.from_config(result.config)
        summaries.append(
            _summarize(
                result.of_verdict(Verdict.ESCAPED), params.omega.lo, params.omega.hi, params.prec
            )
        )
    return summaries


def clip_to_range(
    classified: Sequence[ClassifiedSegment], lo: mpfr, hi: mpfr
) -> list[ClassifiedSegment]:
    """Segments of one run restricted to [lo, hi]; pieces keep their verdict."""
    clipped = []
    for record in _sorted(classified):
        left, right = max(record.lo, lo), min(record.hi, hi)
        if left < right:
            clipped.append(record.model_copy(update={"lo": left, "hi": right}))
    return clipped


def subrange_from_run(
    result: RunResult, ranges: Sequence[Tuple[mpfr, mpfr]]
) -> list[SubrangeSummary]:
    """Sub-range statistics filtered out of a single run over a wider omega."""
    prec = precision_for(result.config.p)
    pplus = result.of_verdict(Verdict.ESCAPED)
    return [_summarize(clip_to_range(pplus, lo, hi), lo, hi, prec) for lo, hi in ranges]


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residual**2)) / spread if spread > 0 else 1.0
    return LinearFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


def verdict_breakdown(
    classified: Sequence[ClassifiedSegment], prec: Precision
) -> dict[Verdict, Tuple[int, Measure]]:
    table = {}
    for verdict in Verdict:
        members = [r for r in classified if r.verdict is verdict]
        lower, upper = _total(members, prec)
        table[verdict] = (len(members), Measure(lower=lower, upper=upper))
    return table
