"""
First-encounter survey over a uniform subdivision, plus the parameter studies
that rerun the escape engine with one knob varied.
"""

import time
from functools import partial
from typing import Sequence

from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.models.engine import EngineParams
from app.models.orbit import DeltaRelation, MonotonicityFailure, OrbitState, ParamSegment
from app.schemas.run_schema import FLAG_NAMES, Measure, RunConfig, Verdict
from app.schemas.survey_schema import (
    BisectStudyRow,
    N0SweepRow,
    SurveyOutcome,
    SurveyRecord,
)
from app.services.escape_service import run_escape, seed_queue
from app.services.orbit_service import delta_hit, monotone_width, orbit_init, orbit_step
from app.utils.logger import get_logger
from app.utils.parallel import OrderedPool

logger = get_logger()

DEFAULT_S_VALUES = list(range(10, 61))
DEFAULT_N0_VALUES = [15, 17, 20, 25, 30, 35, 40]


def _with(config: RunConfig, **changes) -> RunConfig:
    # revalidate, so cross-field rules still hold for the varied knob
    try:
        return RunConfig(**{**config.model_dump(), **changes})
    except ValidationError as e:
        flag = FLAG_NAMES[next(iter(changes))]
        raise ConfigurationError(str(e.errors()[0].get("msg", e)), flag=flag) from e


def survey_segment(segment: ParamSegment, params: EngineParams) -> SurveyRecord:
    """Iterate one segment to its first Δ encounter; no chopping."""
    nbhd, prec = params.nbhd, params.prec
    state = orbit_init(segment)
    while True:
        if delta_hit(state, nbhd) is DeltaRelation.HIT:
            lower, upper = monotone_width(state, prec)
            return SurveyRecord(
                lo=segment.lo,
                hi=segment.hi,
                outcome=SurveyOutcome.HIT,
                first_hit=state.n,
                width_at_hit=Measure(lower=lower, upper=upper),
            )
        if state.n >= params.n_max:
            return SurveyRecord(lo=segment.lo, hi=segment.hi, outcome=SurveyOutcome.EXHAUSTED)
        outcome = orbit_step(state, nbhd, prec)
        if isinstance(outcome, OrbitState):
            state = outcome
            continue
        kind = (
            SurveyOutcome.PROBLEM
            if isinstance(outcome, MonotonicityFailure)
            else SurveyOutcome.PRECISION_LOSS
        )
        return SurveyRecord(
            lo=segment.lo, hi=segment.hi, outcome=kind, problem_iter=outcome.n
        )


def run_survey(config: RunConfig) -> list[SurveyRecord]:
    """
    Record where each initial segment first meets Δ, without chopping.

    Args:
        config: Run configuration; u, n_max, n0 and p are used

    Returns:
        One SurveyRecord per seeded segment, in ascending order
    """
    params = EngineParams.from_config(config)
    started = time.perf_counter()
    logger.info("survey started: %s", config.echo())

    segments = seed_queue(params.omega, config.u, params.prec)
    with OrderedPool(config.threads) as pool:
        records = list(pool.map(partial(survey_segment, params=params), segments))

    counts = {outcome: 0 for outcome in SurveyOutcome}
    for record in records:
        counts[record.outcome] += 1
    logger.info(
        "survey finished: %s in %.1f s",
        ", ".join(f"{k.value}={v}" for k, v in counts.items()),
        time.perf_counter() - started,
    )
    return records


def run_bisect_study(config: RunConfig, s_values: Sequence[int] = DEFAULT_S_VALUES) -> list[BisectStudyRow]:
    """
    Excluded measure and runtime of an iMax-capped escape run, per s.

    Args:
        config: Base configuration; s is replaced for each row
        s_values: Bisection step counts to compare

    Returns:
        One BisectStudyRow per s, in the order given
    """
    rows = []
    for s in s_values:
        result = run_escape(_with(config, s=s))
        rows.append(
            BisectStudyRow(
                s=s,
                excluded=result.measures[Verdict.DELTA_EXCLUDED],
                wallclock_seconds=result.wallclock_seconds,
            )
        )
        logger.info("bisect study s=%d done in %.1f s", s, result.wallclock_seconds)
    return rows


def run_n0_sweep(config: RunConfig, n0_values: Sequence[int] = DEFAULT_N0_VALUES) -> list[N0SweepRow]:
    """ESCAPED count and measure of a full escape run for each N0."""
    rows = []
    for n0 in n0_values:
        result = run_escape(_with(config, n0=n0))
        rows.append(
            N0SweepRow(
                n0=n0,
                escaped_count=result.counts[Verdict.ESCAPED],
                escaped=result.measures[Verdict.ESCAPED],
                processed=result.processed,
                wallclock_seconds=result.wallclock_seconds,
            )
        )
        logger.info("n0 sweep n0=%d done in %.1f s", n0, result.wallclock_seconds)
    return rows
