from decimal import Decimal
from typing import Literal

from gmpy2 import mpfr
from pydantic import BaseModel, ConfigDict

from app.schemas.run_schema import Measure


class CurvePoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    threshold: Decimal
    lower: mpfr
    upper: mpfr
    count: int


class MeasureCurve(BaseModel):
    # "at_least" curves are non-increasing in the threshold, "below" curves non-decreasing
    kind: Literal["at_least", "below"] = "at_least"
    points: list[CurvePoint]


class HistogramSlot(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    index: int
    width_from: float
    width_to: float
    count: int
    lower: mpfr
    upper: mpfr


class WidthHistogram(BaseModel):
    slots: list[HistogramSlot]


class PieSlice(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    label: str
    count: int
    lower: mpfr
    upper: mpfr


class SubrangeSummary(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    range_lo: mpfr
    range_hi: mpfr
    escaped: Measure
    mu_percent: Measure
    pie: list[PieSlice]


class LinearFit(BaseModel):
    slope: float
    intercept: float
    r_squared: float
