from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional, Sequence, Tuple

import click

from app.models.engine import EngineParams
from app.models.interval import bound_from_text, precision_for
from app.schemas import ClassifiedSegment, RunConfig, RunResult, Verdict
from app.services import (
    DEFAULT_SLOTS,
    escape_time_curve,
    measure_at_least_n,
    measure_width_at_least,
    measure_width_below,
    replay_escape,
    result_from_classified,
    subrange_from_run,
    subrange_summary,
    verdict_breakdown,
    width_slots,
)
from app.utils.config_file import run_config_from_echo
from app.utils.logger import get_logger
from app.utils.serialization import (
    bound_to_decimal,
    is_survey_file,
    read_results,
    read_summary,
    read_survey,
    write_breakdown,
    write_curve,
    write_histogram,
    write_subranges,
)

logger = get_logger()

DEFAULT_RANGES = "1.4:1.5,1.5:1.6,1.6:1.7,1.7:1.8,1.8:1.9,1.9:2"
DEFAULT_WIDTH_THRESHOLDS = "0,0.05,0.1,0.2,0.3,0.4,0.5,0.75,1,1.5,2"
DEFAULT_SIZE_THRESHOLDS = ",".join(f"1e-{k}" for k in range(10, 0, -1))


def parse_decimals(ctx, param, value) -> Optional[list[Decimal]]:
    if value is None:
        return None
    try:
        return [Decimal(part.strip()) for part in value.split(",") if part.strip()]
    except InvalidOperation:
        raise click.BadParameter(f"not a list of decimals: {value!r}")


def parse_ranges(ctx, param, value) -> Optional[list[Tuple[Decimal, Decimal]]]:
    if value is None:
        return None
    if value == "default":
        value = DEFAULT_RANGES
    ranges = []
    try:
        for part in value.split(","):
            lo, hi = part.split(":")
            ranges.append((Decimal(lo), Decimal(hi)))
    except (ValueError, InvalidOperation):
        raise click.BadParameter(f"expected LO:HI,... got {value!r}")
    if any(not lo < hi for lo, hi in ranges):
        raise click.BadParameter("every range needs LO < HI")
    return ranges


def _config_for(results_path: Path, summary_path: Optional[Path], records) -> RunConfig:
    summary_path = summary_path or results_path.parent / "summary.json"
    if summary_path.is_file():
        return run_config_from_echo(read_summary(summary_path)["config"])
    # no summary: defaults, with omega spanning the records exactly
    logger.warning("no summary next to %s; assuming default settings", results_path)
    ordered = sorted(records, key=lambda r: r.lo)
    omega = (bound_to_decimal(ordered[0].lo), bound_to_decimal(ordered[-1].hi))
    return RunConfig(omega=omega, p=max(53, max(r.hi.precision for r in ordered)))


def _load_runs(inputs: Sequence[Path], summaries: Sequence[Path]) -> list[RunResult]:
    runs = []
    for index, path in enumerate(inputs):
        records: list[ClassifiedSegment] = read_results(path)
        if not records:
            raise click.ClickException(f"{path} holds no segments")
        summary = summaries[index] if index < len(summaries) else None
        runs.append(result_from_classified(_config_for(path, summary, records), records))
    return runs


def _report_survey(paths: Sequence[Path], out_dir: Path, thresholds) -> None:
    records = [record for path in paths for record in read_survey(path)]
    prec = precision_for(max([53] + [r.hi.precision for r in records]))
    hits = [r.first_hit for r in records if r.first_hit is not None]
    n_values = range(0, max(hits, default=0) + 1)
    write_curve(out_dir / "first_hit_curve.csv", measure_at_least_n(records, n_values, prec))
    write_curve(
        out_dir / "width_at_hit_curve.csv", measure_width_at_least(records, thresholds, prec)
    )
    logger.info("wrote survey curves for %d records to %s", len(records), out_dir)


def _report_runs(
    runs: list[RunResult], out_dir: Path, slots: int, ranges, thresholds, verify: bool
) -> None:
    run = runs[0]
    prec = precision_for(run.config.p)
    classified = [c for r in runs for c in r.classified]
    params = EngineParams.from_config(run.config)

    # 1. Per-verdict totals
    write_breakdown(out_dir / "verdicts.csv", verdict_breakdown(classified, prec))

    # 2. Measure curves over escape time and over parameter width
    pplus = [c for c in classified if c.verdict is Verdict.ESCAPED]
    times = [c.escape_time for c in pplus]
    n_values = range(0, max(times, default=0) + 1)
    curve = escape_time_curve(run, n_values) if len(runs) == 1 else measure_at_least_n(pplus, n_values, prec)
    write_curve(out_dir / "escape_time_curve.csv", curve)
    write_curve(out_dir / "width_below_curve.csv", measure_width_below(pplus, thresholds, prec))

    # 3. Width histogram over [w|omega|, |omega|]
    omega_width = float(run.config.omega[1] - run.config.omega[0])
    histogram = width_slots(pplus, omega_width, float(run.config.w), prec, slots)
    write_histogram(out_dir / "histogram.csv", histogram)

    # 4. Sub-range summaries
    summaries = []
    if ranges:
        bounds = [
            (bound_from_text(str(lo), params.prec), bound_from_text(str(hi), params.prec))
            for lo, hi in ranges
        ]
        for r in runs:
            summaries.extend(subrange_from_run(r, bounds))
    elif len(runs) > 1:
        summaries = subrange_summary(runs)
    if summaries:
        write_subranges(out_dir / "subranges.json", summaries)
        for s in summaries:
            logger.info(
                "range [%s, %s]: mu in [%.2f, %.2f] %%",
                float(s.range_lo), float(s.range_hi),
                float(s.mu_percent.lower), float(s.mu_percent.upper),
            )

    # 5. Optional independent replay of every escaped segment
    if verify:
        failed = 0
        for r in runs:
            replay_params = EngineParams.from_config(r.config)
            failed += sum(
                1 for c in r.of_verdict(Verdict.ESCAPED) if not replay_escape(c, replay_params)
            )
        if failed:
            raise click.ClickException(f"{failed} escaped segments failed replay")
        logger.info("replay confirmed all %d escaped segments", len(pplus))

    logger.info("wrote report for %d segments to %s", len(classified), out_dir)


@click.command("report")
@click.option("--in", "inputs", multiple=True, required=True,
              type=click.Path(dir_okay=False, path_type=Path),
              help="Results (or survey) file; repeat for sub-range runs.")
@click.option("--summary", "summaries", multiple=True,
              type=click.Path(dir_okay=False, path_type=Path),
              help="Summary of the matching --in (default: summary.json beside it).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), show_default=True)
@click.option("--histogram-slots", type=click.IntRange(min=1), default=DEFAULT_SLOTS, show_default=True)
@click.option("--ranges", callback=parse_ranges, default=None,
              help="Sub-ranges LO:HI,... or 'default' for the six tenths of [1.4, 2].")
@click.option("--thresholds", callback=parse_decimals, default=None,
              help="Width thresholds for the width curves.")
@click.option("--verify", is_flag=True, help="Replay every ESCAPED segment.")
def report_command(inputs, summaries, out_dir: Path, histogram_slots: int, ranges, thresholds, verify) -> None:
    """Aggregate statistics over prior escape or survey outputs."""
    if is_survey_file(inputs[0]):
        widths = thresholds or parse_decimals(None, None, DEFAULT_WIDTH_THRESHOLDS)
        _report_survey(inputs, out_dir, widths)
        return
    runs = _load_runs(inputs, summaries)
    sizes = thresholds or parse_decimals(None, None, DEFAULT_SIZE_THRESHOLDS)
    _report_runs(runs, out_dir, histogram_slots, ranges, sizes, verify)
