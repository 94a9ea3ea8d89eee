from pathlib import Path

import click

from app.commands.options import resolve_config
from app.models.engine import EngineParams
from app.services import orbit_trajectory
from app.utils.logger import get_logger
from app.utils.serialization import write_trajectory

logger = get_logger()


@click.command("trajectory")
@click.option("--omega", nargs=2, type=str, required=True, metavar="LO HI")
@click.option("--nmax", type=int, default=None)
@click.option("--delta", type=str, default=None)
@click.option("--precision", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
              show_default=True)
def trajectory_command(omega, nmax, delta, precision, out_dir: Path) -> None:
    """Dump the certified orbit states of one segment, for debugging."""
    # n0 plays no role here; pin it so any --nmax validates
    config = resolve_config(None, omega=omega, nmax=nmax, delta=delta, precision=precision, n0=1)
    params = EngineParams.from_config(config)
    states, failure = orbit_trajectory(params.omega, params.nbhd, params.prec, config.n_max)
    if failure is not None:
        logger.info("orbit stopped at n=%d: %s", failure.n, type(failure).__name__)
    path = write_trajectory(out_dir / "trajectory.csv", states, failure)
    logger.info("wrote %d states to %s", len(states), path)
