from pathlib import Path

import click

from app.commands.options import output_options, resolve_config, run_options
from app.models.interval import precision_for
from app.services import run_escape
from app.utils.logger import get_logger
from app.utils.serialization import write_results, write_summary

logger = get_logger()


@click.command("escape")
@run_options
@output_options
def escape_command(config_path, out_dir: Path, fmt: str, **flags) -> None:
    """Certify escape times over omega and write results plus summary."""
    # 1. Build the effective configuration (flags > config file > defaults)
    config = resolve_config(config_path, **flags)

    # 2. Run the queue engine
    result = run_escape(config)

    # 3. Write results and summary; wallclock only lives in the summary
    results_path = write_results(
        out_dir / f"results.{fmt}", result.classified, precision_for(config.p), fmt
    )
    summary_path = write_summary(out_dir / "summary.json", result)
    logger.info("wrote %s and %s", results_path, summary_path)
