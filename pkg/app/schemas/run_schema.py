from decimal import Decimal
from enum import Enum
from typing import Optional, Tuple

from gmpy2 import mpfr
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.orbit import ParamSegment

# RunConfig field -> command-line flag, used to name the flag in diagnostics
FLAG_NAMES: dict[str, str] = {
    "omega": "omega",
    "delta": "delta",
    "n0": "n0",
    "n_max": "nmax",
    "n_min": "nmin",
    "u": "subdiv",
    "w": "min-width-frac",
    "s": "bisect-steps",
    "p": "precision",
    "i_max": "imax",
    "queue_cap": "queue-cap",
    "threads": "threads",
}


class RunConfig(BaseModel):
    """All tunables of a run. Decimal quantities keep the user's exact text."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega: Tuple[Decimal, Decimal] = (Decimal("1.4"), Decimal("2"))
    delta: Decimal = Field(default=Decimal("1e-3"), gt=0)
    n0: int = Field(default=25, gt=0)
    n_max: int = Field(default=200, gt=0)
    n_min: Optional[int] = Field(default=None, ge=1)
    u: int = Field(default=600, ge=1)
    w: Decimal = Field(default=Decimal("1e-10"), gt=0, lt=1)
    s: int = Field(default=40, ge=1)
    p: int = Field(default=250, ge=53)
    i_max: Optional[int] = Field(default=None, ge=1)
    queue_cap: Optional[int] = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_cross_fields(self) -> "RunConfig":
        if self.n0 > self.n_max:
            raise ValueError("n0 must not exceed nmax")
        if not self.omega[0] < self.omega[1]:
            raise ValueError("omega must satisfy LO < HI")
        return self

    def echo(self) -> dict[str, object]:
        """Flag-named view of the config, stable for serialization."""
        data = self.model_dump()
        out: dict[str, object] = {}
        for name, flag in FLAG_NAMES.items():
            value = data[name]
            if name == "omega":
                value = [str(v) for v in value]
            elif isinstance(value, Decimal):
                value = str(value)
            out[flag] = value
        return out


class Verdict(str, Enum):
    ESCAPED = "ESCAPED"
    TOO_SMALL = "TOO_SMALL"
    MAX_ITER = "MAX_ITER"
    PRECISION_LOSS = "PRECISION_LOSS"
    NO_SIGN_MIN_WIDTH = "NO_SIGN_MIN_WIDTH"
    DELTA_EXCLUDED = "DELTA_EXCLUDED"
    QUEUE_LEFTOVER = "QUEUE_LEFTOVER"


class StopReason(str, Enum):
    COMPLETED = "COMPLETED"
    I_MAX = "I_MAX"
    QUEUE_CAP = "QUEUE_CAP"
    N_MIN = "N_MIN"


class Measure(BaseModel):
    """Rigorous enclosure [lower, upper] of a total length."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lower: mpfr
    upper: mpfr


class ClassifiedSegment(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lo: mpfr
    hi: mpfr
    certified_iter: int = 0
    verdict: Verdict
    escape_time: Optional[int] = None
    width_at_escape: Optional[Measure] = None
    hit_iter: Optional[int] = None

    @property
    def segment(self) -> ParamSegment:
        return ParamSegment(self.lo, self.hi, self.certified_iter)

    @classmethod
    def of(cls, segment: ParamSegment, verdict: Verdict, **kwargs) -> "ClassifiedSegment":
        return cls(
            lo=segment.lo,
            hi=segment.hi,
            certified_iter=segment.certified_iter,
            verdict=verdict,
            **kwargs,
        )


class RunResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    classified: list[ClassifiedSegment]
    measures: dict[Verdict, Measure]
    counts: dict[Verdict, int]
    processed: int
    max_queue_depth: int
    stop_reason: StopReason = StopReason.COMPLETED
    wallclock_seconds: float = 0.0
    # effective p-bit values the run used, hex-float encoded
    effective: dict[str, str] = Field(default_factory=dict)

    def of_verdict(self, verdict: Verdict) -> list[ClassifiedSegment]:
        return [c for c in self.classified if c.verdict == verdict]
