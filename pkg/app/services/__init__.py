"""
Services layer for the escape engine.
Export all service entry points here for clean imports.
"""

from app.services.analytics_service import (
    DEFAULT_SLOTS,
    escape_time_curve,
    linear_fit,
    measure_at_least_n,
    measure_width_at_least,
    measure_width_below,
    subrange_from_run,
    subrange_summary,
    verdict_breakdown,
    width_slots,
)
from app.services.escape_service import replay_escape, result_from_classified, run_escape
from app.services.orbit_service import orbit_init, orbit_step, orbit_trajectory
from app.services.survey_service import (
    DEFAULT_N0_VALUES,
    DEFAULT_S_VALUES,
    run_bisect_study,
    run_n0_sweep,
    run_survey,
)

__all__ = [
    "orbit_init",
    "orbit_step",
    "orbit_trajectory",
    "run_escape",
    "replay_escape",
    "result_from_classified",
    "run_survey",
    "run_bisect_study",
    "run_n0_sweep",
    "DEFAULT_N0_VALUES",
    "DEFAULT_S_VALUES",
    "DEFAULT_SLOTS",
    "escape_time_curve",
    "linear_fit",
    "measure_at_least_n",
    "measure_width_at_least",
    "measure_width_below",
    "subrange_from_run",
    "subrange_summary",
    "verdict_breakdown",
    "width_slots",
]
