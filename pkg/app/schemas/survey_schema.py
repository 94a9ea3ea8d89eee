from enum import Enum
from typing import Optional

from gmpy2 import mpfr
from pydantic import BaseModel, ConfigDict

from app.models.orbit import ParamSegment
from app.schemas.run_schema import Measure


class SurveyOutcome(str, Enum):
    HIT = "HIT"
    # monotonicity could not be certified
    PROBLEM = "PROBLEM"
    PRECISION_LOSS = "PRECISION_LOSS"
    # certified Δ-free through iterate nMax
    EXHAUSTED = "EXHAUSTED"


class SurveyRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lo: mpfr
    hi: mpfr
    outcome: SurveyOutcome
    first_hit: Optional[int] = None
    width_at_hit: Optional[Measure] = None
    problem_iter: Optional[int] = None

    @property
    def segment(self) -> ParamSegment:
        return ParamSegment(self.lo, self.hi)


class BisectStudyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: int
    excluded: Measure
    wallclock_seconds: float


class N0SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n0: int
    escaped_count: int
    escaped: Measure
    processed: int
    wallclock_seconds: float
