import csv
import json
from decimal import Decimal

import pytest
from click.testing import CliRunner

import app.schemas as schemas
import app.services as services
from app.commands.report_command import DEFAULT_SIZE_THRESHOLDS
from app.main import cli
from app.models.interval import precision_for
from app.schemas import Verdict
from app.services import (
    DEFAULT_SLOTS,
    escape_time_curve,
    measure_width_below,
    run_escape,
    verdict_breakdown,
    width_slots,
)
from app.utils.config_file import run_config_from_echo
from app.utils.serialization import write_breakdown, write_curve, write_histogram

TINY_RUN = [
    "escape",
    "--omega", "1.4", "2",
    "--subdiv", "10",
    "--min-width-frac", "1e-2",
    "--n0", "5",
    "--bisect-steps", "10",
    "--precision", "64",
]


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _invoke(runner: CliRunner, args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_version(runner) -> None:
    result = _invoke(runner, ["--version"])
    assert result.exit_code == 0
    assert "1.0.0" in result.output


def test_escape_run_is_reproducible(runner, tmp_path) -> None:
    first, second = tmp_path / "a", tmp_path / "b"
    assert _invoke(runner, TINY_RUN + ["--out", first]).exit_code == 0
    assert _invoke(runner, TINY_RUN + ["--out", second, "--threads", "2"]).exit_code == 0
    assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()

    summary = json.loads((first / "summary.json").read_text())
    assert summary["stop_reason"] == "COMPLETED"
    assert summary["config"]["n0"] == 5
    assert summary["effective"]["omega_hi"]["hex"] == "0x1p+1"
    assert sum(summary["counts"].values()) == len(_rows(first / "results.csv"))


def test_escape_writes_json_when_asked(runner, tmp_path) -> None:
    result = _invoke(runner, TINY_RUN + ["--out", tmp_path, "--format", "json", "--imax", "3"])
    assert result.exit_code == 0
    rows = json.loads((tmp_path / "results.json").read_text())
    assert rows and {"verdict", "lo_hex", "hi_hex"} <= set(rows[0])


@pytest.mark.parametrize(
    "args, flag",
    [
        (["--delta", "abc"], "--delta"),
        (["--n0", "300"], "--n0"),
        (["--omega", "2", "1.4"], "--omega"),
        (["--precision", "10"], "--precision"),
    ],
)
def test_invalid_configuration_exits_with_usage_error(runner, tmp_path, args, flag) -> None:
    result = _invoke(runner, ["escape", "--out", tmp_path] + args)
    assert result.exit_code == 2
    assert flag in result.output
    assert not (tmp_path / "results.csv").exists()


def test_flags_override_config_file(runner, tmp_path) -> None:
    config = tmp_path / "run.conf"
    config.write_text("omega = 1.5 1.6\ndelta = 0.01\nsubdiv = 10\n")
    result = _invoke(
        runner,
        ["escape", "--config", config, "--delta", "0.02", "--imax", "1", "--precision", "64",
         "--out", tmp_path],
    )
    assert result.exit_code == 0
    echo = json.loads((tmp_path / "summary.json").read_text())["config"]
    assert echo["omega"] == ["1.5", "1.6"]
    assert echo["delta"] == "0.02"
    assert echo["subdiv"] == 10
    assert echo["n0"] == 25


def test_unknown_config_key_is_rejected(runner, tmp_path) -> None:
    config = tmp_path / "run.conf"
    config.write_text("colour = red\n")
    result = _invoke(runner, ["escape", "--config", config, "--out", tmp_path])
    assert result.exit_code == 2
    assert "--config" in result.output


def test_report_on_results_file(runner, tmp_path) -> None:
    assert _invoke(runner, TINY_RUN + ["--out", tmp_path]).exit_code == 0
    report = tmp_path / "report"
    result = _invoke(
        runner, ["report", "--in", tmp_path / "results.csv", "--out", report, "--verify",
                 "--ranges", "1.4:1.7,1.7:2"]
    )
    assert result.exit_code == 0
    assert len((report / "histogram.csv").read_text().splitlines()) == 81
    verdicts = {row["verdict"]: int(row["count"]) for row in _rows(report / "verdicts.csv")}
    assert verdicts["ESCAPED"] > 0
    ranges = json.loads((report / "subranges.json").read_text())["ranges"]
    assert len(ranges) == 2
    curve = _rows(report / "escape_time_curve.csv")
    assert int(curve[0]["count"]) == verdicts["ESCAPED"]



def test_report_matches_in_process_analytics(runner, tmp_path) -> None:
    assert _invoke(runner, TINY_RUN + ["--out", tmp_path]).exit_code == 0
    report = tmp_path / "report"
    assert _invoke(runner, ["report", "--in", tmp_path / "results.csv", "--out", report]).exit_code == 0

    config = run_config_from_echo(json.loads((tmp_path / "summary.json").read_text())["config"])
    run = run_escape(config)
    prec = precision_for(config.p)
    pplus = run.of_verdict(Verdict.ESCAPED)
    n_values = range(0, max(c.escape_time for c in pplus) + 1)
    sizes = [Decimal(t) for t in DEFAULT_SIZE_THRESHOLDS.split(",")]
    omega_width = float(config.omega[1] - config.omega[0])
    local = tmp_path / "local"
    write_breakdown(local / "verdicts.csv", verdict_breakdown(run.classified, prec))
    write_curve(local / "escape_time_curve.csv", escape_time_curve(run, n_values))
    write_curve(local / "width_below_curve.csv", measure_width_below(pplus, sizes, prec))
    write_histogram(
        local / "histogram.csv", width_slots(pplus, omega_width, float(config.w), prec, DEFAULT_SLOTS)
    )
    for name in ("verdicts.csv", "escape_time_curve.csv", "width_below_curve.csv", "histogram.csv"):
        assert (report / name).read_bytes() == (local / name).read_bytes(), name

def test_report_rejects_missing_input(runner, tmp_path) -> None:
    result = _invoke(runner, ["report", "--in", tmp_path / "absent.csv", "--out", tmp_path])
    assert result.exit_code == 1


def test_survey_and_its_report(runner, tmp_path) -> None:
    result = _invoke(
        runner,
        ["survey", "--omega", "1.4", "2", "--subdiv", "6", "--nmax", "100", "--precision", "128",
         "--out", tmp_path],
    )
    assert result.exit_code == 0
    rows = _rows(tmp_path / "survey.csv")
    assert len(rows) == 6
    assert {row["outcome"] for row in rows} <= {"HIT", "EXHAUSTED", "PROBLEM", "PRECISION_LOSS"}

    assert _invoke(runner, ["report", "--in", tmp_path / "survey.csv", "--out", tmp_path]).exit_code == 0
    curve = _rows(tmp_path / "first_hit_curve.csv")
    assert curve[0]["threshold"] == "0"


def test_trajectory_stops_at_monotonicity_failure(runner, tmp_path) -> None:
    result = _invoke(runner, ["trajectory", "--omega", "1.4", "2", "--nmax", "10", "--out", tmp_path])
    assert result.exit_code == 0
    rows = _rows(tmp_path / "trajectory.csv")
    assert [row["n"] for row in rows] == ["0", "1", "2", "3"]
    assert rows[-1]["outcome"] == "MonotonicityFailure"
    with open(tmp_path / "trajectory.csv", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    assert header[:9] == ["n", "eLo.lo", "eLo.hi", "eHi.lo", "eHi.hi", "d.lo", "d.hi", "hull.lo", "hull.hi"]
    assert rows[0]["hull.lo"].startswith("0x1.6666") and rows[0]["hull.hi"] == "0x1p+1"
    assert all(row["d.lo"].lstrip("-").startswith("0x") for row in rows[:-1])


def test_bisect_study_command(runner, tmp_path) -> None:
    result = _invoke(
        runner,
        ["bisect-study", "--omega", "1.4", "2", "--subdiv", "10", "--imax", "20", "--precision", "64",
         "--s-values", "5,10", "--out", tmp_path],
    )
    assert result.exit_code == 0
    assert [row["s"] for row in _rows(tmp_path / "bisect_study.csv")] == ["5", "10"]


@pytest.mark.parametrize("package", [schemas, services])
def test_package_exports_resolve(package) -> None:
    assert all(getattr(package, name, None) is not None for name in package.__all__)
