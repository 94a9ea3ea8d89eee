import click

from app.commands import (
    bisect_study_command,
    escape_command,
    n0_sweep_command,
    report_command,
    survey_command,
    trajectory_command,
)


def register_commands(cli: click.Group):
    cli.add_command(escape_command)
    cli.add_command(survey_command)
    cli.add_command(bisect_study_command)
    cli.add_command(n0_sweep_command)
    cli.add_command(report_command)
    cli.add_command(trajectory_command)
