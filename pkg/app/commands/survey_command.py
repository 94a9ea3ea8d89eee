from pathlib import Path

import click

from app.commands.options import output_options, resolve_config, run_options
from app.services import run_survey
from app.utils.logger import get_logger
from app.utils.serialization import write_survey

logger = get_logger()


@click.command("survey")
@run_options
@output_options
def survey_command(config_path, out_dir: Path, fmt: str, **flags) -> None:
    """Iterate each uniform piece of omega to its first Δ encounter."""
    config = resolve_config(config_path, **flags)
    records = run_survey(config)
    path = write_survey(out_dir / f"survey.{fmt}", records, fmt)
    logger.info("wrote %d survey records to %s", len(records), path)
