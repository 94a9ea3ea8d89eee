import math
import random
from decimal import Decimal

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from app.core.errors import IndivisibleSegment
from app.models.engine import EngineParams
from app.models.interval import bound_from_rational, bound_from_text, precision_for, to_rational
from app.models.orbit import CriticalNeighbourhood, OrbitState, ParamSegment
from app.schemas.run_schema import RunConfig, StopReason, Verdict
from app.services.escape_service import (
    chop_at_delta,
    process_segment,
    replay_escape,
    run_escape,
    seed_queue,
    split_half,
    verify_tiling,
)
from app.services.orbit_service import orbit_init, orbit_step
from tests.helpers import assert_tiles, segment


def _first_iterate(seg: ParamSegment, nbhd, prec) -> OrbitState:
    state = orbit_step(orbit_init(seg), nbhd, prec)
    assert isinstance(state, OrbitState)
    return state


@pytest.fixture(scope="module")
def mini_run(mini_config):
    return run_escape(mini_config)


def test_split_half_of_full_range(prec, omega) -> None:
    left, right = split_half(omega, prec)
    assert left.lo == omega.lo and right.hi == omega.hi
    assert left.hi == right.lo
    assert abs(float(left.hi) - 1.7) < 1e-15


def test_split_half_of_unit_interval_is_exact(prec) -> None:
    left, right = split_half(ParamSegment(mpfr(0), mpfr(1), certified_iter=7), prec)
    assert (left.lo, left.hi, right.lo, right.hi) == (0, mpfr("0.5"), mpfr("0.5"), 1)
    assert left.certified_iter == right.certified_iter == 7


def test_split_half_widths_sum_exactly() -> None:
    rng = random.Random(3)
    p64 = precision_for(64)
    for _ in range(10_000):
        a = bound_from_rational(mpq(rng.randint(0, 10**9), 10**9), p64)
        b = bound_from_rational(mpq(rng.randint(0, 10**9), 10**9), p64)
        if a == b:
            continue
        seg = ParamSegment(min(a, b), max(a, b))
        left, right = split_half(seg, p64)
        total = (to_rational(left.hi) - to_rational(left.lo)) + (
            to_rational(right.hi) - to_rational(right.lo)
        )
        assert total == to_rational(seg.hi) - to_rational(seg.lo)


def test_split_half_refuses_one_ulp_segment() -> None:
    p53 = precision_for(53)
    with gmpy2.context(precision=53):
        above_one = gmpy2.next_above(mpfr(1))
    with pytest.raises(IndivisibleSegment):
        split_half(ParamSegment(mpfr(1), above_one), p53)


def test_seed_queue_single_piece_is_omega(prec, omega) -> None:
    assert seed_queue(omega, 1, prec) == [omega]


def test_seed_queue_tiles_omega(prec, omega) -> None:
    pieces = seed_queue(omega, 6, prec)
    assert len(pieces) == 6
    assert_tiles(pieces, omega.lo, omega.hi)
    ulp = mpq(1, 2**(prec.bits - 2))
    tenth = (to_rational(omega.hi) - to_rational(omega.lo)) / 6
    for piece in pieces:
        assert abs(to_rational(piece.hi) - to_rational(piece.lo) - tenth) <= ulp


@pytest.mark.parametrize("steps", [10, 20, 30])
def test_chop_matches_quadratic_roots(prec, steps: int) -> None:
    nbhd = CriticalNeighbourhood(bound_from_text("0.05", prec), prec)
    seg = segment("0.9", "1.1", prec)
    state = _first_iterate(seg, nbhd, prec)
    assert state.orientation == -1

    left, excluded, right = chop_at_delta(state, nbhd, steps, prec)

    delta = float(nbhd.delta)
    root_left = (1 + math.sqrt(1 - 4 * delta)) / 2
    root_right = (1 + math.sqrt(1 + 4 * delta)) / 2
    tolerance = 0.2 * 2.0**-steps
    assert float(excluded.lo) <= root_left <= float(excluded.lo) + tolerance + 1e-15
    assert float(excluded.hi) - tolerance - 1e-15 <= root_right <= float(excluded.hi)
    assert left.lo == seg.lo and left.hi == excluded.lo
    assert right.lo == excluded.hi and right.hi == seg.hi


def test_chop_excludes_segment_whose_image_lies_in_delta(prec) -> None:
    nbhd = CriticalNeighbourhood(bound_from_text("0.05", prec), prec)
    seg = segment("0.999", "1.001", prec)
    left, excluded, right = chop_at_delta(_first_iterate(seg, nbhd, prec), nbhd, 20, prec)
    assert left is None and right is None
    assert excluded == seg


def test_chop_with_single_crossing_keeps_far_side_whole(prec) -> None:
    nbhd = CriticalNeighbourhood(bound_from_text("0.05", prec), prec)
    seg = segment("0.92", "1.0", prec)
    left, excluded, right = chop_at_delta(_first_iterate(seg, nbhd, prec), nbhd, 20, prec)
    assert right is None
    assert left is not None and left.lo == seg.lo
    assert excluded.hi == seg.hi
    assert excluded.lo < mpfr("0.9473")


def test_process_segment_chops_early_hit(prec) -> None:
    config = RunConfig(omega=("1.4", "2"), u=1, w="1e-6", s=20)
    params = EngineParams.from_config(config)
    outcome = process_segment(params.omega, params)
    verdicts = [c.verdict for c in outcome.classified]
    assert Verdict.DELTA_EXCLUDED in verdicts
    assert outcome.requeue
    for piece in outcome.requeue:
        assert piece.certified_iter == 2


def test_process_segment_escapes_when_minimal_time_reached(prec) -> None:
    config = RunConfig(omega=("1.4", "2"), u=1, n0=2)
    params = EngineParams.from_config(config)
    outcome = process_segment(params.omega, params)
    (record,) = outcome.classified
    assert record.verdict is Verdict.ESCAPED
    assert record.escape_time == 2
    assert record.width_at_escape.lower >= params.nbhd.sqrt_delta
    assert replay_escape(record, params)


def test_mini_run_tiles_omega(mini_run, mini_config) -> None:
    params = EngineParams.from_config(mini_config)
    assert mini_run.stop_reason is StopReason.COMPLETED
    assert verify_tiling(mini_run.classified, params.omega)
    assert_tiles(mini_run.classified, params.omega.lo, params.omega.hi)
    assert sum(mini_run.counts.values()) == len(mini_run.classified)


def test_mini_run_verdict_invariants(mini_run, mini_config) -> None:
    params = EngineParams.from_config(mini_config)
    assert mini_run.counts[Verdict.ESCAPED] > 0
    assert mini_run.counts[Verdict.QUEUE_LEFTOVER] == 0
    for record in mini_run.classified:
        if record.verdict is Verdict.ESCAPED:
            assert record.escape_time >= mini_config.n0
            assert record.width_at_escape.lower >= params.nbhd.sqrt_delta
        if record.verdict is Verdict.TOO_SMALL:
            assert params.is_too_small(record.segment)


def test_mini_run_escaped_segments_replay(mini_run, mini_config) -> None:
    params = EngineParams.from_config(mini_config)
    for record in mini_run.of_verdict(Verdict.ESCAPED):
        assert replay_escape(record, params)


def test_mini_run_measures_bracket_omega(mini_run, mini_config) -> None:
    total_lower = sum(float(m.lower) for m in mini_run.measures.values())
    total_upper = sum(float(m.upper) for m in mini_run.measures.values())
    assert total_lower <= 0.6 + 1e-12
    assert total_upper >= 0.6 - 1e-12


def test_worker_count_does_not_change_results(mini_run, mini_config) -> None:
    parallel = run_escape(mini_config.model_copy(update={"threads": 4}))

    def key(result):
        return [
            (c.lo, c.hi, c.verdict, c.certified_iter, c.escape_time, c.hit_iter)
            for c in result.classified
        ]

    assert key(parallel) == key(mini_run)
    assert parallel.measures == mini_run.measures
    assert parallel.processed == mini_run.processed


def test_imax_stops_early_and_still_tiles(mini_config) -> None:
    result = run_escape(mini_config.model_copy(update={"i_max": 5}))
    params = EngineParams.from_config(mini_config)
    assert result.stop_reason is StopReason.I_MAX
    assert result.processed == 5
    assert result.counts[Verdict.QUEUE_LEFTOVER] > 0
    assert verify_tiling(result.classified, params.omega)


def test_queue_cap_stops_without_processing(mini_config) -> None:
    result = run_escape(mini_config.model_copy(update={"queue_cap": 1}))
    assert result.stop_reason is StopReason.QUEUE_CAP
    assert result.processed == 0
    assert result.counts[Verdict.QUEUE_LEFTOVER] == mini_config.u


def test_nmin_leaves_only_certified_segments(mini_config) -> None:
    result = run_escape(mini_config.model_copy(update={"n_min": 3}))
    assert result.stop_reason in (StopReason.N_MIN, StopReason.COMPLETED)
    for record in result.of_verdict(Verdict.QUEUE_LEFTOVER):
        assert record.certified_iter >= 3


def test_effective_values_are_echoed(mini_run) -> None:
    assert set(mini_run.effective) == {"omega_lo", "omega_hi", "delta", "sqrt_delta_up", "min_width"}
    assert mini_run.effective["omega_hi"] == "0x1p+1"


def test_finer_resolution_only_adds_escaped_measure(mini_run, mini_config) -> None:
    coarse = run_escape(mini_config.model_copy(update={"w": Decimal("1e-2")}))
    assert coarse.stop_reason is StopReason.COMPLETED
    fine_escaped = {(c.lo, c.hi) for c in mini_run.of_verdict(Verdict.ESCAPED)}
    assert {(c.lo, c.hi) for c in coarse.of_verdict(Verdict.ESCAPED)} <= fine_escaped
    assert coarse.measures[Verdict.ESCAPED].lower <= mini_run.measures[Verdict.ESCAPED].lower
    assert coarse.counts[Verdict.TOO_SMALL] > 0
