"""
Options shared by every subcommand that builds a RunConfig.

Flags default to None so that an omitted flag falls back to the config file,
and only then to the RunConfig default.
"""

from pathlib import Path
from typing import Callable, Optional

import click

from app.core.errors import ConfigurationError, EscapeError
from app.schemas import RunConfig
from app.utils.config_file import build_run_config, load_config_file

_DEFAULTS = RunConfig()

RUN_OPTIONS = [
    click.option("--omega", nargs=2, type=str, default=None, metavar="LO HI",
                 help=f"Parameter range (default {_DEFAULTS.omega[0]} {_DEFAULTS.omega[1]})."),
    click.option("--delta", type=str, default=None,
                 help=f"Half-width of the critical neighbourhood (default {_DEFAULTS.delta})."),
    click.option("--n0", type=int, default=None, help=f"Minimal escape time (default {_DEFAULTS.n0})."),
    click.option("--nmax", type=int, default=None, help=f"Iteration cap (default {_DEFAULTS.n_max})."),
    click.option("--nmin", type=int, default=None, help="Stop once every queued segment is certified this far."),
    click.option("--subdiv", type=int, default=None, help=f"Initial uniform pieces (default {_DEFAULTS.u})."),
    click.option("--min-width-frac", type=str, default=None,
                 help=f"Minimum segment width as a fraction of |omega| (default {_DEFAULTS.w})."),
    click.option("--bisect-steps", type=int, default=None,
                 help=f"Bisection steps per Δ boundary (default {_DEFAULTS.s})."),
    click.option("--precision", type=int, default=None, help=f"Significand bits (default {_DEFAULTS.p})."),
    click.option("--imax", type=int, default=None, help="Stop after this many processed segments."),
    click.option("--queue-cap", type=int, default=None, help="Stop when the queue grows beyond this."),
    click.option("--threads", type=int, default=None, help="Worker processes; never changes outputs."),
    click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
                 help="Flat key = value file with the same keys as the flags."),
]

OUTPUT_OPTIONS = [
    click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
                 show_default=True, help="Output directory."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
]


def _apply(options) -> Callable:
    def decorator(fn: Callable) -> Callable:
        for option in reversed(options):
            fn = option(fn)
        return fn

    return decorator


run_options = _apply(RUN_OPTIONS)
output_options = _apply(OUTPUT_OPTIONS)


def resolve_config(config_path: Optional[Path], **flags) -> RunConfig:
    """Merge config file and flags (flags win), raising click usage errors."""
    try:
        values: dict[str, object] = load_config_file(config_path) if config_path else {}
        for name, value in flags.items():
            if value is not None:
                values[name.replace("_", "-")] = value
        return build_run_config(values)
    except ConfigurationError as e:
        raise click.UsageError(str(e))


def fail(error: EscapeError) -> None:
    """Turn a package error into a click exception with the right exit status."""
    if isinstance(error, ConfigurationError):
        raise click.UsageError(str(error))
    raise click.ClickException(str(error))
