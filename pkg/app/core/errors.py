"""
Exception hierarchy for the escape engine.

Orbit failures (monotonicity, precision loss) are ordinary algorithm
outcomes and are modelled as values in app.models.orbit, not here.
"""

from typing import Optional


class EscapeError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(EscapeError):
    def __init__(self, message: str, flag: Optional[str] = None) -> None:
        self.flag = flag
        if flag:
            message = f"--{flag}: {message}"
        super().__init__(message)


class DomainError(EscapeError, ValueError):
    pass


class IndivisibleSegment(EscapeError):
    pass


class SerializationError(EscapeError, ValueError):
    pass
