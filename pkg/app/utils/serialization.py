"""
Codecs and file writers for run, survey and analytics outputs.

Bounds are written as exact hex-floats (``0x1.8p+0``) so that reading a
results file reproduces every endpoint bit for bit. Measures additionally
appear as decimals with 12 fractional digits, rounded in the direction that keeps
them rigorous: lower bounds toward -inf, upper bounds toward +inf.
"""

import csv
import json
import re
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from pathlib import Path
from typing import Iterable, Optional, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from app.core.config import settings
from app.core.errors import SerializationError
from app.models.interval import MPInterval, Precision, width_bounds
from app.schemas.analytics_schema import MeasureCurve, SubrangeSummary, WidthHistogram
from app.schemas.run_schema import ClassifiedSegment, Measure, RunResult, Verdict
from app.schemas.survey_schema import (
    BisectStudyRow,
    N0SweepRow,
    SurveyOutcome,
    SurveyRecord,
)

DECIMAL_PLACES = 12
_DECIMAL_STEP = Decimal(1).scaleb(-DECIMAL_PLACES)
ROUNDING_NOTE = (
    f"decimals carry {DECIMAL_PLACES} fractional digits; "
    "lower bounds are rounded toward -inf, upper bounds toward +inf"
)

_HEX_PATTERN = re.compile(r"^(-?)0x([01])(?:\.([0-9a-f]+))?p([+-]\d+)$")

RESULT_FIELDS = [
    "verdict",
    "lo_hex",
    "hi_hex",
    "width_dec_lower",
    "certifiedIter",
    "escapeTime",
    "widthAtEscape_dec_lower",
    "hitIter",
    "widthAtEscape_dec_upper",
]
SURVEY_FIELDS = [
    "lo_hex",
    "hi_hex",
    "outcome",
    "firstHit",
    "widthAtHit_dec_lower",
    "widthAtHit_dec_upper",
    "problemIter",
]
TRAJECTORY_FIELDS = [
    "n",
    "eLo.lo",
    "eLo.hi",
    "eHi.lo",
    "eHi.hi",
    "d.lo",
    "d.hi",
    "hull.lo",
    "hull.hi",
    "orientation",
    "outcome",
]
STUDY_FIELDS = ["s", "excluded_dec_lower", "excluded_dec_upper", "wallclock_seconds"]
N0_SWEEP_FIELDS = [
    "n0",
    "escaped_count",
    "escaped_dec_lower",
    "escaped_dec_upper",
    "processed",
    "wallclock_seconds",
]


# ---------------------------------------------------------------------------
# scalar codecs
# ---------------------------------------------------------------------------


def bound_to_hex(x: mpfr) -> str:
    """Shortest exact ``0x1.<frac>p<exp>`` rendering of a bound."""
    if gmpy2.is_nan(x):
        raise SerializationError("NaN has no hex-float form")
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0x0p+0"
    mantissa, exp = x.as_mantissa_exp()
    sign = "-" if mantissa < 0 else ""
    mantissa = abs(int(mantissa))
    exp = int(exp)
    trailing = (mantissa & -mantissa).bit_length() - 1
    mantissa >>= trailing
    exp += trailing
    frac_bits = mantissa.bit_length() - 1
    exp += frac_bits
    if frac_bits == 0:
        return f"{sign}0x1p{exp:+d}"
    frac = mantissa - (1 << frac_bits)
    pad = (-frac_bits) % 4
    digits = (frac_bits + pad) // 4
    return f"{sign}0x1.{frac << pad:0{digits}x}p{exp:+d}"


def bound_from_hex(text: str) -> mpfr:
    """Inverse of ``bound_to_hex``; the result carries enough bits to be exact."""
    text = text.strip().lower()
    if text in ("inf", "+inf"):
        return gmpy2.inf()
    if text == "-inf":
        return -gmpy2.inf()
    match = _HEX_PATTERN.match(text)
    if match is None:
        raise SerializationError(f"malformed hex-float {text!r}")
    sign, lead, frac, exp = match.groups()
    frac = frac or ""
    numerator = int(lead + frac, 16)
    if numerator == 0:
        return mpfr(0)
    value = mpq(numerator, 16 ** len(frac)) * mpq(2) ** int(exp)
    if sign:
        value = -value
    bits = max(53, numerator.bit_length())
    with gmpy2.context(precision=bits, round=gmpy2.RoundToNearest):
        result = mpfr(value)
    return result


def decimal_text(x: mpfr, upward: bool = False) -> str:
    """Fixed-point text with 12 fractional digits, rounded down (or up) from the exact value.

    Args:
        x: Bound to render
        upward: Round toward +inf instead of -inf

    Returns:
        Plain decimal such as ``0.539302250926``, never scientific notation
    """
    if gmpy2.is_nan(x):
        raise SerializationError("NaN has no decimal form")
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    exact = bound_to_decimal(x)
    digits = max(1, exact.adjusted() + 1) + DECIMAL_PLACES + 1
    rounded = exact.quantize(
        _DECIMAL_STEP,
        rounding=ROUND_CEILING if upward else ROUND_FLOOR,
        context=Context(prec=digits),
    )
    return format(rounded, "f")


def bound_from_decimal(text: str, upward: bool = False) -> mpfr:
    """Parse a written decimal back into a bound on the safe side."""
    rounding = gmpy2.RoundUp if upward else gmpy2.RoundDown
    with gmpy2.context(precision=64, round=rounding):
        return mpfr(text)


def measure_to_dict(measure: Measure) -> dict[str, str]:
    return {
        "lower": decimal_text(measure.lower),
        "upper": decimal_text(measure.upper, upward=True),
        "lower_hex": bound_to_hex(measure.lower),
        "upper_hex": bound_to_hex(measure.upper),
    }


def _optional(value) -> str:
    return "" if value is None else str(value)


def _optional_int(text: str) -> Optional[int]:
    return int(text) if text not in (None, "") else None


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def _write_rows(path: Path, fields: Sequence[str], rows: Iterable[dict[str, str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def _write_json(path: Path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path


def _read_rows(path: Path, fields: Sequence[str]) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = set(fields) - set(reader.fieldnames or [])
            if missing:
                raise SerializationError(f"{path}: missing columns {sorted(missing)}")
            return list(reader)
    except FileNotFoundError:
        raise SerializationError(f"input file not found: {path}")


def result_row(record: ClassifiedSegment, prec: Precision) -> dict[str, str]:
    width_lower, _ = width_bounds(MPInterval(record.lo, record.hi), prec)
    at_escape = record.width_at_escape
    return {
        "verdict": record.verdict.value,
        "lo_hex": bound_to_hex(record.lo),
        "hi_hex": bound_to_hex(record.hi),
        "width_dec_lower": decimal_text(width_lower),
        "certifiedIter": str(record.certified_iter),
        "escapeTime": _optional(record.escape_time),
        "widthAtEscape_dec_lower": decimal_text(at_escape.lower) if at_escape else "",
        "hitIter": _optional(record.hit_iter),
        "widthAtEscape_dec_upper": decimal_text(at_escape.upper, upward=True) if at_escape else "",
    }


def write_results(path: Path, classified: list[ClassifiedSegment], prec: Precision, fmt: str = "csv") -> Path:
    rows = [result_row(record, prec) for record in classified]
    if fmt == "json":
        return _write_json(path, rows)
    return _write_rows(path, RESULT_FIELDS, rows)


def _result_from_row(row: dict[str, str]) -> ClassifiedSegment:
    try:
        at_escape = None
        if row.get("widthAtEscape_dec_lower"):
            upper_text = row.get("widthAtEscape_dec_upper") or "inf"
            at_escape = Measure(
                lower=bound_from_decimal(row["widthAtEscape_dec_lower"]),
                upper=bound_from_decimal(upper_text, upward=True),
            )
        return ClassifiedSegment(
            lo=bound_from_hex(row["lo_hex"]),
            hi=bound_from_hex(row["hi_hex"]),
            certified_iter=int(row["certifiedIter"]),
            verdict=Verdict(row["verdict"]),
            escape_time=_optional_int(row["escapeTime"]),
            width_at_escape=at_escape,
            hit_iter=_optional_int(row["hitIter"]),
        )
    except (KeyError, ValueError) as e:
        raise SerializationError(f"malformed results row {row}: {e}")


def read_results(path: Path) -> list[ClassifiedSegment]:
    path = Path(path)
    if path.suffix == ".json":
        try:
            with open(path, encoding="utf-8") as f:
                rows = json.load(f)
        except FileNotFoundError:
            raise SerializationError(f"input file not found: {path}")
    else:
        rows = _read_rows(path, RESULT_FIELDS[:8])
    return [_result_from_row(row) for row in rows]


def summary_payload(result: RunResult) -> dict[str, object]:
    return {
        "app": settings.APP_NAME,
        "version": settings.VERSION,
        "config": result.config.echo(),
        "effective": {
            name: {"hex": text, "decimal": decimal_text(bound_from_hex(text))}
            for name, text in result.effective.items()
        },
        "stop_reason": result.stop_reason.value,
        "counts": {verdict.value: result.counts.get(verdict, 0) for verdict in Verdict},
        "measures": {
            verdict.value: measure_to_dict(result.measures[verdict])
            for verdict in Verdict
            if verdict in result.measures
        },
        "rounding": ROUNDING_NOTE,
        "processed": result.processed,
        "max_queue_depth": result.max_queue_depth,
        "wallclock_seconds": round(result.wallclock_seconds, 3),
    }


def write_summary(path: Path, result: RunResult) -> Path:
    return _write_json(path, summary_payload(result))


def read_summary(path: Path) -> dict[str, object]:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise SerializationError(f"summary file not found: {path}")
    except json.JSONDecodeError as e:
        raise SerializationError(f"{path}: {e}")


def survey_row(record: SurveyRecord) -> dict[str, str]:
    at_hit = record.width_at_hit
    return {
        "lo_hex": bound_to_hex(record.lo),
        "hi_hex": bound_to_hex(record.hi),
        "outcome": record.outcome.value,
        "firstHit": _optional(record.first_hit),
        "widthAtHit_dec_lower": decimal_text(at_hit.lower) if at_hit else "",
        "widthAtHit_dec_upper": decimal_text(at_hit.upper, upward=True) if at_hit else "",
        "problemIter": _optional(record.problem_iter),
    }


def write_survey(path: Path, records: list[SurveyRecord], fmt: str = "csv") -> Path:
    rows = [survey_row(record) for record in records]
    if fmt == "json":
        return _write_json(path, rows)
    return _write_rows(path, SURVEY_FIELDS, rows)


def read_survey(path: Path) -> list[SurveyRecord]:
    records = []
    for row in _read_rows(Path(path), SURVEY_FIELDS[:6]):
        try:
            at_hit = None
            if row["widthAtHit_dec_lower"]:
                at_hit = Measure(
                    lower=bound_from_decimal(row["widthAtHit_dec_lower"]),
                    upper=bound_from_decimal(row["widthAtHit_dec_upper"], upward=True),
                )
            records.append(
                SurveyRecord(
                    lo=bound_from_hex(row["lo_hex"]),
                    hi=bound_from_hex(row["hi_hex"]),
                    outcome=SurveyOutcome(row["outcome"]),
                    first_hit=_optional_int(row["firstHit"]),
                    width_at_hit=at_hit,
                    problem_iter=_optional_int(row.get("problemIter", "")),
                )
            )
        except (KeyError, ValueError) as e:
            raise SerializationError(f"malformed survey row {row}: {e}")
    return records


def write_study(path: Path, rows: list[BisectStudyRow]) -> Path:
    return _write_rows(
        path,
        STUDY_FIELDS,
        (
            {
                "s": str(row.s),
                "excluded_dec_lower": decimal_text(row.excluded.lower),
                "excluded_dec_upper": decimal_text(row.excluded.upper, upward=True),
                "wallclock_seconds": f"{row.wallclock_seconds:.3f}",
            }
            for row in rows
        ),
    )


def write_n0_sweep(path: Path, rows: list[N0SweepRow]) -> Path:
    return _write_rows(
        path,
        N0_SWEEP_FIELDS,
        (
            {
                "n0": str(row.n0),
                "escaped_count": str(row.escaped_count),
                "escaped_dec_lower": decimal_text(row.escaped.lower),
                "escaped_dec_upper": decimal_text(row.escaped.upper, upward=True),
                "processed": str(row.processed),
                "wallclock_seconds": f"{row.wallclock_seconds:.3f}",
            }
            for row in rows
        ),
    )


def write_curve(path: Path, curve: MeasureCurve) -> Path:
    return _write_rows(
        path,
        ["threshold", "measure_dec_lower", "measure_dec_upper", "count"],
        (
            {
                "threshold": str(point.threshold),
                "measure_dec_lower": decimal_text(point.lower),
                "measure_dec_upper": decimal_text(point.upper, upward=True),
                "count": str(point.count),
            }
            for point in curve.points
        ),
    )


def write_histogram(path: Path, histogram: WidthHistogram) -> Path:
    return _write_rows(
        path,
        ["slot", "width_from", "width_to", "count", "measure_dec_lower", "measure_dec_upper"],
        (
            {
                "slot": str(slot.index),
                "width_from": f"{slot.width_from:.6e}",
                "width_to": f"{slot.width_to:.6e}",
                "count": str(slot.count),
                "measure_dec_lower": decimal_text(slot.lower),
                "measure_dec_upper": decimal_text(slot.upper, upward=True),
            }
            for slot in histogram.slots
        ),
    )


def write_breakdown(path: Path, breakdown: dict[Verdict, tuple]) -> Path:
    return _write_rows(
        path,
        ["verdict", "count", "measure_dec_lower", "measure_dec_upper"],
        (
            {
                "verdict": verdict.value,
                "count": str(count),
                "measure_dec_lower": decimal_text(measure.lower),
                "measure_dec_upper": decimal_text(measure.upper, upward=True),
            }
            for verdict, (count, measure) in breakdown.items()
        ),
    )


def write_subranges(path: Path, summaries: list[SubrangeSummary]) -> Path:
    payload = [
        {
            "range": [bound_to_hex(s.range_lo), bound_to_hex(s.range_hi)],
            "range_decimal": [decimal_text(s.range_lo), decimal_text(s.range_hi, upward=True)],
            "escaped": measure_to_dict(s.escaped),
            "mu_percent": measure_to_dict(s.mu_percent),
            "pie": [
                {
                    "label": piece.label,
                    "count": piece.count,
                    "lower": decimal_text(piece.lower),
                    "upper": decimal_text(piece.upper, upward=True),
                }
                for piece in s.pie
            ],
        }
        for s in summaries
    ]
    return _write_json(path, {"rounding": ROUNDING_NOTE, "ranges": payload})


def trajectory_row(state) -> dict[str, str]:
    return {
        "n": str(state.n),
        "eLo.lo": bound_to_hex(state.e_lo.lo),
        "eLo.hi": bound_to_hex(state.e_lo.hi),
        "eHi.lo": bound_to_hex(state.e_hi.lo),
        "eHi.hi": bound_to_hex(state.e_hi.hi),
        "d.lo": bound_to_hex(state.d_enc.lo),
        "d.hi": bound_to_hex(state.d_enc.hi),
        "hull.lo": bound_to_hex(state.c_hull.lo),
        "hull.hi": bound_to_hex(state.c_hull.hi),
        "orientation": str(state.orientation),
    }


def write_trajectory(path: Path, states, failure=None) -> Path:
    """
    Dump certified orbit states, one row per iterate, all bounds as hex-floats.

    Args:
        path: Output CSV path
        states: OrbitStates from n = 0 onwards
        failure: Terminal MonotonicityFailure or PrecisionLoss, if any

    Returns:
        The written path; a failure adds one last row naming the outcome
    """
    rows = [trajectory_row(state) for state in states]
    if failure is not None:
        rows.append({"n": str(failure.n), "outcome": type(failure).__name__})
    return _write_rows(path, TRAJECTORY_FIELDS, rows)


def bound_to_decimal(x: mpfr) -> Decimal:
    """Exact decimal value of a finite bound (binary fractions always terminate)."""
    num, den = (int(v) for v in x.as_integer_ratio())
    digits = len(str(abs(num))) + den.bit_length() + 2
    return Context(prec=digits).divide(Decimal(num), Decimal(den))


def is_survey_file(path: Path) -> bool:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            if path.suffix == ".json":
                rows = json.load(f)
                return bool(rows) and "outcome" in rows[0]
            header = next(csv.reader(f), [])
    except FileNotFoundError:
        raise SerializationError(f"input file not found: {path}")
    return "outcome" in header
