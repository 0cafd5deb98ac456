"""Monte Carlo studies: estimation accuracy, test size and power, and calibrated sweeps.

Replication ``r`` always draws from its own stream derived from ``(seed, r)``, and
replications are aggregated in index order, so results do not depend on how the work
is split across processes.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence, Union

import numpy as np

from config import get_chunk_size, get_max_workers
from constants import (
    ALPHA,
    DROPOUT_RATES,
    STUDY_HORIZON,
    TEST_FH,
    TEST_LOGRANK,
    TEST_RMST,
    TEST_WMST,
)
from curves import Observation
from datagen.calibration import CalibrationError, calibrate_scenario
from datagen.generator import generate_trial
from datagen.laws import true_mean_survival
from datagen.scenarios import get_scenario
from estimators import EstimationError, PointDatum, fit_curve, impute_midpoint
from mean_survival import DegenerateTestError, Window, select_tau1, wmst, wmst_diff_test
from rank_tests import fh_weight, logrank_weight, weighted_logrank
from study_config import (
    KIND_ESTIMATION,
    KIND_ESTIMATION_GRID,
    KIND_SWEEP,
    KIND_TEST,
    K_NEEDS_PROFILE,
    StudyConfig,
    StudyConfigError,
    TestSpec,
)

logger = logging.getLogger(__name__)

ESTIMATION_GRID: tuple[tuple[str, tuple[Any, ...]], ...] = (
    (
        "scenario",
        (
            "weibull-1-1",
            "weibull-1-0.5",
            "weibull-1-2",
            "weibull-0.5-1",
            "weibull-2-1",
            "weibull-1-3",
        ),
    ),
    ("dropout", tuple(DROPOUT_RATES)),
    ("n", (100, 200, 400)),
    ("k", (3, 5, 10, 20)),
    ("p_exact", (0.0, 0.2, 0.5, 1.0)),
)

INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class EstimationRow:
    scenario: str
    method: str
    tau0: float
    tau1: float
    true_value: float
    mean_estimate: float
    rbias: float
    mse: float
    mc_se: float
    replications: int
    failures: int
    factor: str = ""
    level: str = ""


@dataclass(frozen=True)
class TestRow:
    scenario: str
    test: str
    rejection_rate: float
    mc_se: float
    replications: int
    degenerate: int
    true_difference: float | None = None
    mean_difference: float | None = None
    x: float | None = None
    delta: float | None = None
    note: str = ""


Row = Union[EstimationRow, TestRow]


@dataclass(frozen=True)
class MetricsSummary:
    study: str
    kind: str
    rows: tuple[Row, ...]
    replications: int
    failures: int
    wall_time: float


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(replication,)))


def _run_replications(
    worker: Callable[[StudyConfig, int, int], list], config: StudyConfig
) -> list:
    total = config.replications
    chunk_size = get_chunk_size()
    bounds = [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]
    worker_count = min(get_max_workers(), len(bounds))

    results_by_start: dict[int, list] = {}
    if worker_count <= 1:
        for start, stop in bounds:
            results_by_start[start] = worker(config, start, stop)
    else:
        with ProcessPoolExecutor(max_workers=worker_count) as executor:
            futures = {
                executor.submit(worker, config, start, stop): start for start, stop in bounds
            }
            for future in as_completed(futures):
                results_by_start[futures[future]] = future.result()
    return [record for start, _ in bounds for record in results_by_start[start]]


def _estimation_tau1(config: StudyConfig) -> float:
    return STUDY_HORIZON if config.tau1 is None else config.tau1


def _estimate_replication(
    config: StudyConfig, replication: int
) -> dict[tuple[str, float], float | None]:
    rng = replication_rng(config.seed, replication)
    data = generate_trial(config, rng)
    tau1 = _estimation_tau1(config)
    estimates: dict[tuple[str, float], float | None] = {}
    for method in config.methods:
        try:
            curve, _ = fit_curve(data, method)
            values: list[float | None] = [wmst(curve, Window(t, tau1)) for t in config.tau0s]
        except EstimationError as exc:
            logger.warning("Replication %s: %s failed: %s", replication, method, exc)
            values = [None] * len(config.tau0s)
        except Exception:
            logger.exception("Replication %s: %s failed unexpectedly", replication, method)
            values = [None] * len(config.tau0s)
        for tau0, value in zip(config.tau0s, values):
            estimates[(method, tau0)] = value
    return estimates


def _estimation_chunk(config: StudyConfig, start: int, stop: int) -> list:
    return [_estimate_replication(config, r) for r in range(start, stop)]


def run_estimation_study(config: StudyConfig) -> MetricsSummary:
    """rBias, MSE and Monte Carlo SE of the window mean for each estimation method."""
    started = time.monotonic()
    scenario = config.scenario
    tau1 = _estimation_tau1(config)
    logger.info(
        "Estimation study %s: %s, %s replications", config.name, scenario.label, config.replications
    )
    records = _run_replications(_estimation_chunk, config)

    rows = []
    failures = 0
    for method in config.methods:
        for tau0 in config.tau0s:
            values = [record[(method, tau0)] for record in records]
            estimates = np.array([value for value in values if value is not None], dtype=float)
            failed = len(values) - estimates.size
            failures += failed
            truth = true_mean_survival(scenario.control, tau0, tau1)
            rows.append(
                _estimation_row(scenario.label, method, tau0, tau1, truth, estimates, failed)
            )

    elapsed = time.monotonic() - started
    logger.info("Estimation study %s finished in %.1fs", config.name, elapsed)
    return MetricsSummary(
        config.name, KIND_ESTIMATION, tuple(rows), len(records), failures, elapsed
    )


def _estimation_row(
    scenario: str,
    method: str,
    tau0: float,
    tau1: float,
    truth: float,
    estimates: np.ndarray,
    failures: int,
) -> EstimationRow:
    used = estimates.size
    if used == 0:
        mean = rbias = mse = mc_se = math.nan
    else:
        mean = float(estimates.mean())
        rbias = (mean - truth) / truth
        mse = float(np.mean((estimates - truth) ** 2))
        mc_se = float(estimates.std(ddof=1) / math.sqrt(used) / truth) if used > 1 else 0.0
    return EstimationRow(
        scenario=scenario,
        method=method,
        tau0=tau0,
        tau1=tau1,
        true_value=truth,
        mean_estimate=mean,
        rbias=rbias,
        mse=mse,
        mc_se=mc_se,
        replications=used,
        failures=failures,
    )


def _vary(base: StudyConfig, factor: str, level: Any) -> StudyConfig:
    if factor == "scenario":
        return replace(base, scenarios=(get_scenario(level),))
    if factor == "dropout":
        return replace(base, dropout=level)
    if factor == "n":
        return replace(base, n=int(level))
    if factor == "k":
        if not isinstance(base.dropout, str):
            raise StudyConfigError("grid.k", K_NEEDS_PROFILE)
        return replace(base, k=int(level))
    if factor == "p_exact":
        return replace(base, p_exact=float(level))
    raise StudyConfigError(f"grid.{factor}", "unknown factor")


def run_estimation_grid(
    base: StudyConfig, vary: Sequence[tuple[str, Sequence[Any]]] | None = None
) -> MetricsSummary:
    """One-at-a-time sensitivity grid around ``base``: each factor level is its own study."""
    started = time.monotonic()
    grid = vary or base.grid or ESTIMATION_GRID
    base = replace(base, kind=KIND_ESTIMATION)
    rows: list[Row] = []
    replications = failures = 0
    for factor, levels in grid:
        for level in levels:
            summary = run_estimation_study(_vary(base, factor, level))
            rows.extend(replace(row, factor=factor, level=str(level)) for row in summary.rows)
            replications += summary.replications
            failures += summary.failures
    return MetricsSummary(
        base.name, KIND_ESTIMATION_GRID, tuple(rows), replications, failures,
        time.monotonic() - started,
    )


def _apply_test(
    spec: TestSpec, arm0: list[PointDatum], arm1: list[PointDatum], tau1: float
) -> tuple[bool, float | None]:
    if spec.is_mean_survival:
        tau0 = 0.0 if spec.kind == TEST_RMST else spec.tau0
        result = wmst_diff_test(arm0, arm1, Window(tau0, tau1))
        assert result.effect is not None
        return result.p_value < ALPHA, result.effect.estimate
    weight = logrank_weight() if spec.kind == TEST_LOGRANK else fh_weight(spec.p, spec.q)
    return weighted_logrank(arm0, arm1, weight).p_value < ALPHA, None


def _split_arms(data: Sequence[Observation]) -> tuple[list[PointDatum], list[PointDatum]]:
    arm0 = impute_midpoint([observation for observation in data if observation.arm == 0])
    arm1 = impute_midpoint([observation for observation in data if observation.arm == 1])
    return arm0, arm1


def _test_replication(
    config: StudyConfig, replication: int
) -> dict[str, tuple[bool, float | None] | None]:
    rng = replication_rng(config.seed, replication)
    arm0, arm1 = _split_arms(generate_trial(config, rng))
    tau1 = select_tau1(arm0, arm1) if config.tau1 is None else config.tau1
    outcomes: dict[str, tuple[bool, float | None] | None] = {}
    for spec in config.tests:
        try:
            outcomes[spec.label] = _apply_test(spec, arm0, arm1, tau1)
        except (DegenerateTestError, EstimationError, ValueError) as exc:
            logger.debug("Replication %s: %s degenerate: %s", replication, spec.label, exc)
            outcomes[spec.label] = None
    return outcomes


def _test_chunk(config: StudyConfig, start: int, stop: int) -> list:
    return [_test_replication(config, r) for r in range(start, stop)]


def _true_difference(config: StudyConfig, spec: TestSpec) -> float | None:
    if not spec.is_mean_survival:
        return None
    tau0 = 0.0 if spec.kind == TEST_RMST else spec.tau0
    tau1 = _estimation_tau1(config)
    if tau0 >= tau1:
        return None
    scenario = config.scenario
    return true_mean_survival(scenario.treatment, tau0, tau1) - true_mean_survival(
        scenario.control, tau0, tau1
    )


def run_test_study(config: StudyConfig) -> MetricsSummary:
    """Rejection rate at two-sided α for each test on mid-point imputed data."""
    started = time.monotonic()
    scenario = config.scenario
    logger.info(
        "Test study %s: %s, %s replications", config.name, scenario.label, config.replications
    )
    records = _run_replications(_test_chunk, config)

    rows = []
    degenerate_total = 0
    for spec in config.tests:
        outcomes = [record[spec.label] for record in records]
        completed = [outcome for outcome in outcomes if outcome is not None]
        degenerate = len(outcomes) - len(completed)
        degenerate_total += degenerate
        if degenerate:
            logger.warning(
                "%s: %s degenerate replications of %s", spec.label, degenerate, scenario.label
            )
        used = len(completed)
        rate = float(np.mean([rejected for rejected, _ in completed])) if used else math.nan
        mc_se = math.sqrt(rate * (1.0 - rate) / used) if used else math.nan
        differences = [difference for _, difference in completed if difference is not None]
        rows.append(
            TestRow(
                scenario=scenario.label,
                test=spec.label,
                rejection_rate=rate,
                mc_se=mc_se,
                replications=used,
                degenerate=degenerate,
                true_difference=_true_difference(config, spec),
                mean_difference=float(np.mean(differences)) if differences else None,
            )
        )

    elapsed = time.monotonic() - started
    logger.info("Test study %s finished in %.1fs", config.name, elapsed)
    return MetricsSummary(
        config.name, KIND_TEST, tuple(rows), len(records), degenerate_total, elapsed
    )


def _sweep_tests(config: StudyConfig, tau0s: Sequence[float]) -> tuple[TestSpec, ...]:
    tests = [TestSpec(TEST_RMST)] + [TestSpec(TEST_WMST, tau0=tau0) for tau0 in tau0s]
    tests.extend(spec for spec in config.tests if spec.kind in (TEST_LOGRANK, TEST_FH))
    return tuple(tests)


def run_sweep(
    family: str,
    xs: Sequence[float],
    tau0s: Sequence[float],
    deltas: Sequence[float],
    config: StudyConfig,
) -> MetricsSummary:
    """Power over the (x, τ0, δ) grid of a calibrated family.

    Every τ0 in a cell is evaluated on the same replications. Cells whose calibration
    is infeasible are reported with a note instead of failing the sweep.
    """
    started = time.monotonic()
    tests = _sweep_tests(config, tau0s)
    rows: list[Row] = []
    replications = degenerate = 0
    for x in xs:
        for delta in deltas:
            try:
                scenario = calibrate_scenario(family, x, delta)
            except CalibrationError as exc:
                logger.warning("Skipping sweep cell x=%s delta=%s: %s", x, delta, exc)
                rows.extend(
                    TestRow(
                        scenario=family,
                        test=spec.label,
                        rejection_rate=math.nan,
                        mc_se=math.nan,
                        replications=0,
                        degenerate=0,
                        x=x,
                        delta=delta,
                        note=INFEASIBLE,
                    )
                    for spec in tests
                )
                continue
            cell = replace(config, kind=KIND_TEST, scenarios=(scenario,), tests=tests)
            summary = run_test_study(cell)
            rows.extend(replace(row, x=x, delta=delta) for row in summary.rows)
            replications += summary.replications
            degenerate += summary.failures
    return MetricsSummary(
        config.name, KIND_SWEEP, tuple(rows), replications, degenerate, time.monotonic() - started
    )


def run_study(config: StudyConfig) -> MetricsSummary:
    """Dispatch on ``config.kind``; multi-scenario studies run one scenario at a time."""
    if config.kind == KIND_SWEEP:
        assert config.sweep is not None
        sweep = config.sweep
        return run_sweep(sweep.family, sweep.xs, sweep.tau0s, sweep.deltas, config)
    if config.kind == KIND_ESTIMATION_GRID:
        return run_estimation_grid(config)

    runner = run_estimation_study if config.kind == KIND_ESTIMATION else run_test_study
    started = time.monotonic()
    summaries = [runner(single) for single in config.for_each_scenario()]
    return MetricsSummary(
        study=config.name,
        kind=config.kind,
        rows=tuple(row for summary in summaries for row in summary.rows),
        replications=sum(summary.replications for summary in summaries),
        failures=sum(summary.failures for summary in summaries),
        wall_time=time.monotonic() - started,
    )
