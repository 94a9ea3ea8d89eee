from .analytics_schema import MeasureCurve, SubrangeSummary, WidthHistogram
from .run_schema import ClassifiedSegment, Measure, RunConfig, RunResult, StopReason, Verdict
from .survey_schema import BisectStudyRow, N0SweepRow, SurveyOutcome, SurveyRecord

__all__ = [
    "RunConfig",
    "Verdict",
    "StopReason",
    "Measure",
    "ClassifiedSegment",
    "RunResult",
    "SurveyOutcome",
    "SurveyRecord",
    "BisectStudyRow",
    "N0SweepRow",
    "MeasureCurve",
    "WidthHistogram",
    "SubrangeSummary",
]
