from .escape_command import escape_command
from .report_command import report_command
from .study_command import bisect_study_command, n0_sweep_command
from .survey_command import survey_command
from .trajectory_command import trajectory_command

__all__ = [
    "escape_command",
    "survey_command",
    "bisect_study_command",
    "n0_sweep_command",
    "report_command",
    "trajectory_command",
]
