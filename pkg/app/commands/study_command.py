from pathlib import Path

import click

from app.commands.options import output_options, resolve_config, run_options
from app.services import (
    DEFAULT_N0_VALUES,
    DEFAULT_S_VALUES,
    linear_fit,
    run_bisect_study,
    run_n0_sweep,
)
from app.utils.logger import get_logger
from app.utils.serialization import write_n0_sweep, write_study

logger = get_logger()


def parse_counts(ctx, param, value) -> list[int]:
    """Comma list of positive integers; ranges like 10..60 are expanded."""
    if value is None:
        return None
    counts = []
    try:
        for part in value.split(","):
            part = part.strip()
            if ".." in part:
                start, stop = part.split("..")
                counts.extend(range(int(start), int(stop) + 1))
            elif part:
                counts.append(int(part))
    except ValueError:
        raise click.BadParameter(f"not a list of integers: {value!r}")
    if not counts or any(c < 1 for c in counts):
        raise click.BadParameter("values must be positive integers")
    return counts


@click.command("bisect-study")
@run_options
@output_options
@click.option("--s-values", callback=parse_counts, default=None,
              help="Bisection step counts to compare (default 10..60).")
def bisect_study_command(config_path, out_dir: Path, fmt: str, s_values, **flags) -> None:
    """Excluded measure and runtime as functions of the bisection depth s."""
    config = resolve_config(config_path, **flags)
    rows = run_bisect_study(config, s_values or DEFAULT_S_VALUES)
    path = write_study(out_dir / "bisect_study.csv", rows)
    if len(rows) > 1:
        fit = linear_fit([r.s for r in rows], [r.wallclock_seconds for r in rows])
        logger.info(
            "runtime vs s: slope %.4g s/step, r^2 %.3f", fit.slope, fit.r_squared
        )
    logger.info("wrote %s", path)


@click.command("n0-sweep")
@run_options
@output_options
@click.option("--n0-values", callback=parse_counts, default=None,
              help="Minimal escape times to compare (default 15,17,20,25,30,35,40).")
def n0_sweep_command(config_path, out_dir: Path, fmt: str, n0_values, **flags) -> None:
    """ESCAPED measure as a function of the requested minimal escape time."""
    config = resolve_config(config_path, **flags)
    rows = run_n0_sweep(config, n0_values or DEFAULT_N0_VALUES)
    path = write_n0_sweep(out_dir / "n0_sweep.csv", rows)
    logger.info("wrote %s", path)
