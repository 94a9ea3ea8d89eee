import pytest

from app.models.engine import EngineParams
from app.models.interval import to_rational, width_bounds
from app.models.orbit import DeltaRelation, OrbitState
from app.schemas.run_schema import RunConfig
from app.schemas.survey_schema import SurveyOutcome
from app.services.analytics_service import linear_fit, measure_at_least_n
from app.services.orbit_service import delta_hit, orbit_init, orbit_step
from app.services.survey_service import run_bisect_study, run_n0_sweep, run_survey
from tests.helpers import assert_tiles


def _survey_config(**changes) -> RunConfig:
    values = dict(omega=("1.4", "2"), delta="1e-3", n0=25, n_max=100, u=60, p=200)
    values.update(changes)
    return RunConfig(**values)


def test_whole_range_hits_at_second_iterate() -> None:
    (record,) = run_survey(_survey_config(u=1))
    assert record.outcome is SurveyOutcome.HIT
    assert record.first_hit == 2
    assert abs(float(record.width_at_hit.lower) - 3.0864) < 1e-9
    assert record.width_at_hit.lower <= record.width_at_hit.upper


def test_one_record_per_seeded_segment_tiling_omega() -> None:
    config = _survey_config()
    records = run_survey(config)
    params = EngineParams.from_config(config)
    assert len(records) == config.u
    assert_tiles(records, params.omega.lo, params.omega.hi)
    total = sum(to_rational(r.hi) - to_rational(r.lo) for r in records)
    assert total == to_rational(params.omega.hi) - to_rational(params.omega.lo)


def test_hit_records_replay_first_encounter() -> None:
    config = _survey_config()
    params = EngineParams.from_config(config)
    for record in run_survey(config):
        if record.outcome is not SurveyOutcome.HIT:
            continue
        state = orbit_init(record.segment)
        while state.n < record.first_hit:
            assert delta_hit(state, params.nbhd) is DeltaRelation.DISJOINT
            state = orbit_step(state, params.nbhd, params.prec)
            assert isinstance(state, OrbitState)
        assert delta_hit(state, params.nbhd) is DeltaRelation.HIT


def test_problem_records_carry_failing_iterate() -> None:
    for record in run_survey(_survey_config()):
        if record.outcome in (SurveyOutcome.PROBLEM, SurveyOutcome.PRECISION_LOSS):
            assert record.problem_iter is not None and record.problem_iter >= 1
        if record.outcome is SurveyOutcome.HIT:
            assert 0 <= record.first_hit <= 100


def test_segment_already_meeting_delta_hits_at_zero() -> None:
    (record,) = run_survey(_survey_config(omega=("-0.01", "0.01"), u=1))
    assert record.outcome is SurveyOutcome.HIT
    assert record.first_hit == 0


def test_survey_is_independent_of_worker_count() -> None:
    config = _survey_config()
    serial = run_survey(config)
    parallel = run_survey(config.model_copy(update={"threads": 3}))
    assert serial == parallel


def test_bisect_study_has_one_row_per_s() -> None:
    config = RunConfig(omega=("1.4", "2"), u=10, i_max=30, n0=100, n_max=100, p=128)
    rows = run_bisect_study(config, [5, 10])
    assert [row.s for row in rows] == [5, 10]
    for row in rows:
        assert row.excluded.lower <= row.excluded.upper
        assert row.wallclock_seconds >= 0


def test_n0_sweep_rows_follow_requested_values() -> None:
    config = RunConfig(omega=("1.7", "1.8"), u=10, w="1e-3", s=20, p=128)
    rows = run_n0_sweep(config, [5, 10])
    assert [row.n0 for row in rows] == [5, 10]
    assert all(row.processed > 0 for row in rows)


def test_linear_fit_recovers_a_line() -> None:
    fit = linear_fit([10, 20, 30, 40], [1.0, 2.0, 3.0, 4.0])
    assert fit.slope == pytest.approx(0.1)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_first_hit_curve_is_non_increasing() -> None:
    config = _survey_config()
    records = run_survey(config)
    prec = EngineParams.from_config(config).prec
    curve = measure_at_least_n(records, range(0, 30), prec)
    lowers = [point.lower for point in curve.points]
    assert all(a >= b for a, b in zip(lowers, lowers[1:]))
    full = width_bounds(EngineParams.from_config(config).omega.as_interval(), prec)[1]
    assert curve.points[0].lower <= full


def test_survey_problem_and_exhausted_counts() -> None:
    records = run_survey(_survey_config(u=6000))
    outcomes = [r.outcome for r in records]
    assert abs(outcomes.count(SurveyOutcome.PROBLEM) - 243) <= 12
    assert abs(outcomes.count(SurveyOutcome.EXHAUSTED) - 324) <= 12
