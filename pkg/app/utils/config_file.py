from pathlib import Path
from typing import Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.schemas.run_schema import FLAG_NAMES, RunConfig

FIELD_FOR_FLAG: dict[str, str] = {flag: name for name, flag in FLAG_NAMES.items()}


def load_config_file(path: Path) -> dict[str, object]:
    """Read a flat ``key = value`` file whose keys are long flag names."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}", flag="config")
    raw = dotenv_values(path)
    values: dict[str, object] = {}
    for key, value in raw.items():
        flag = key.strip().lstrip("-").lower().replace("_", "-")
        if flag not in FIELD_FOR_FLAG:
            raise ConfigurationError(f"unknown key {key!r} in {path}", flag="config")
        if value is None or value.strip() == "":
            raise ConfigurationError(f"key {key!r} has no value in {path}", flag=flag)
        value = value.strip()
        values[flag] = value.split() if flag == "omega" else value
    return values


def build_run_config(flag_values: Mapping[str, object]) -> RunConfig:
    """Validate flag-keyed values into a RunConfig, naming the bad flag on error."""
    kwargs = {}
    for flag, value in flag_values.items():
        if value is None:
            continue
        if flag not in FIELD_FOR_FLAG:
            raise ConfigurationError(f"unknown option {flag!r}")
        kwargs[FIELD_FOR_FLAG[flag]] = tuple(value) if flag == "omega" else value
    try:
        return RunConfig(**kwargs)
    except ValidationError as e:
        error = e.errors()[0]
        loc = error.get("loc") or ()
        message = str(error.get("msg", e)).replace("Value error, ", "")
        flag: Optional[str] = FLAG_NAMES.get(str(loc[0])) if loc else None
        if flag is None:
            # cross-field checks name their flag first
            first = message.split(" ", 1)[0]
            flag = first if first in FIELD_FOR_FLAG else None
        raise ConfigurationError(message, flag=flag) from e


def run_config_from_echo(echo: Mapping[str, object]) -> RunConfig:
    """Inverse of ``RunConfig.echo`` for configs stored in summary files."""
    return build_run_config({k: v for k, v in echo.items() if k in FIELD_FOR_FLAG})
