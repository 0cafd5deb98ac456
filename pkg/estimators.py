"""Survival-function estimators for censored data.

Interval observations are either collapsed to a single time (mid-point or right-point
imputation) and fed to the product-limit estimator, or handled directly by Turnbull's
nonparametric maximum-likelihood estimator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from config import get_turnbull_settings
from constants import METHOD_MIDPOINT_KM, METHOD_RIGHTPOINT_KM, METHOD_TURNBULL
from curves import (
    LINEAR,
    STEP,
    Observation,
    ObservationKind,
    RiskRow,
    RiskTable,
    Segment,
    SurvivalCurve,
    eval_curve,
    step_curve,
)

logger = logging.getLogger(__name__)


class EstimationError(RuntimeError):
    """Raised when a survival curve cannot be estimated from the given data."""


class TurnbullConvergenceError(EstimationError):
    """Raised when the Turnbull EM iteration stops at ``max_iter`` without converging."""

    def __init__(self, iterations: int, final_change: float):
        super().__init__(
            f"Turnbull EM did not converge after {iterations} iterations "
            f"(final mass change {final_change:.3e})"
        )
        self.iterations = iterations
        self.final_change = final_change


@dataclass(frozen=True)
class PointDatum:
    time: float
    event: bool

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError(f"time must be non-negative: {self.time}")


def impute_midpoint(data: Sequence[Observation]) -> list[PointDatum]:
    return [_impute(observation, midpoint=True) for observation in data]


def impute_rightpoint(data: Sequence[Observation]) -> list[PointDatum]:
    return [_impute(observation, midpoint=False) for observation in data]


def _impute(observation: Observation, midpoint: bool) -> PointDatum:
    if observation.kind is ObservationKind.RIGHT_CENSORED:
        return PointDatum(observation.left, False)
    if observation.kind is ObservationKind.EXACT:
        return PointDatum(observation.left, True)
    assert observation.right is not None
    if midpoint:
        return PointDatum((observation.left + observation.right) / 2, True)
    return PointDatum(observation.right, True)


def km_fit(data: Sequence[PointDatum]) -> tuple[SurvivalCurve, RiskTable]:
    """Product-limit estimate with its risk table.

    Censorings tied with events stay in the risk set for those events.
    """
    if not data:
        raise EstimationError("Kaplan-Meier fit needs at least one observation")
    times = np.array([datum.time for datum in data], dtype=float)
    events = np.array([datum.event for datum in data], dtype=bool)

    event_times, event_counts = np.unique(times[events], return_counts=True)
    if event_times.size == 0:
        return step_curve([], []), RiskTable(())

    sorted_times = np.sort(times)
    at_risk = times.size - np.searchsorted(sorted_times, event_times, side="left")
    survival = np.cumprod(1.0 - event_counts / at_risk)

    rows = tuple(
        RiskRow(float(t), int(d), int(r)) for t, d, r in zip(event_times, event_counts, at_risk)
    )
    return step_curve(event_times, survival), RiskTable(rows)


def greenwood_terms(table: RiskTable) -> np.ndarray:
    events = table.events
    at_risk = table.at_risk
    with np.errstate(divide="ignore"):
        return np.where(at_risk > events, events / (at_risk * (at_risk - events)), np.inf)


def _greenwood_sum(curve: SurvivalCurve, table: RiskTable, t: float) -> float:
    """Σ_{t_k < t} d_k / (r_k (r_k − d_k)), or 0 once the curve has reached zero."""
    if t < 0:
        raise ValueError(f"t must be non-negative: {t}")
    terms = greenwood_terms(table)[table.times < t]
    if terms.size == 0:
        return 0.0
    if np.isinf(terms).any():
        if eval_curve(curve, t) > 0:
            raise EstimationError(
                f"risk set exhausted before t={t} but the curve is still positive"
            )
        return 0.0
    return float(terms.sum())


def greenwood_var(curve: SurvivalCurve, table: RiskTable, t: float) -> float:
    value = eval_curve(curve, t)
    if value == 0:
        return 0.0
    return value * value * _greenwood_sum(curve, table, t)


def greenwood_cov(curve: SurvivalCurve, table: RiskTable, t_i: float, t_j: float) -> float:
    product = eval_curve(curve, t_i) * eval_curve(curve, t_j)
    if product == 0:
        return 0.0
    return product * _greenwood_sum(curve, table, min(t_i, t_j))


@dataclass(frozen=True)
class TurnbullInterval:
    """Support interval of the NPMLE.

    ``closed_left`` marks a degenerate point mass [t, t]; otherwise the interval is
    (left, right]. ``right`` is infinite for the tail beyond the last finite endpoint.
    """

    left: float
    right: float
    closed_left: bool = False

    @property
    def is_point(self) -> bool:
        return self.closed_left and self.left == self.right


@dataclass(frozen=True)
class TurnbullFit:
    intervals: tuple[TurnbullInterval, ...]
    masses: tuple[float, ...]
    curve: SurvivalCurve
    iterations: int
    final_change: float


# Sort keys for endpoints sharing a value: a point mass opens at the value itself,
# closed right ends come next, and open left ends start just after the value.
_OPEN_AT_VALUE = 0
_CLOSE = 1
_OPEN_AFTER_VALUE = 2


def _observation_bounds(
    data: Sequence[Observation],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lefts = np.empty(len(data))
    rights = np.empty(len(data))
    closed = np.zeros(len(data), dtype=bool)
    for i, observation in enumerate(data):
        lefts[i] = observation.left
        if observation.kind is ObservationKind.RIGHT_CENSORED:
            rights[i] = np.inf
        else:
            assert observation.right is not None
            rights[i] = observation.right
            closed[i] = observation.kind is ObservationKind.EXACT
    return lefts, rights, closed


def turnbull_intervals(data: Sequence[Observation]) -> tuple[TurnbullInterval, ...]:
    """Innermost intervals: a left endpoint immediately followed by a right endpoint."""
    lefts, rights, closed = _observation_bounds(data)
    endpoints: set[tuple[float, int]] = set()
    for left, right, is_closed in zip(lefts, rights, closed):
        endpoints.add((float(left), _OPEN_AT_VALUE if is_closed else _OPEN_AFTER_VALUE))
        endpoints.add((float(right), _CLOSE))

    intervals: list[TurnbullInterval] = []
    previous: tuple[float, int] | None = None
    for value, key in sorted(endpoints):
        if key == _CLOSE and previous is not None and previous[1] != _CLOSE:
            intervals.append(
                TurnbullInterval(previous[0], value, closed_left=previous[1] == _OPEN_AT_VALUE)
            )
        previous = (value, key)
    return tuple(intervals)


def _containment(
    data: Sequence[Observation], intervals: Sequence[TurnbullInterval]
) -> np.ndarray:
    """Boolean n×m matrix: interval j lies inside observation i."""
    lefts, rights, closed = _observation_bounds(data)
    interval_lefts = np.array([interval.left for interval in intervals])
    interval_rights = np.array([interval.right for interval in intervals])
    interval_open = np.array([not interval.closed_left for interval in intervals])
    observation_open = ~closed

    starts_inside = (interval_lefts[None, :] > lefts[:, None]) | (
        (interval_lefts[None, :] == lefts[:, None])
        & (interval_open[None, :] >= observation_open[:, None])
    )
    return starts_inside & (interval_rights[None, :] <= rights[:, None])


def _turnbull_curve(
    intervals: Sequence[TurnbullInterval], masses: np.ndarray
) -> SurvivalCurve:
    """Flat between support intervals, linear across each (q, p], a drop at each point."""
    segments: list[Segment] = []
    cursor, level = 0.0, 1.0
    for interval, mass in zip(intervals, masses):
        if not np.isfinite(interval.right):
            break
        if interval.left > cursor:
            segments.append(Segment(cursor, interval.left, level, level, STEP))
            cursor = interval.left
        next_level = max(level - float(mass), 0.0)
        if interval.is_point:
            level = next_level
            continue
        segments.append(Segment(interval.left, interval.right, level, next_level, LINEAR))
        cursor, level = interval.right, next_level
    return SurvivalCurve(tuple(segments), level)


def _product_limit_fit(data: Sequence[Observation]) -> TurnbullFit:
    # Without interval observations the self-consistent solution is the product-limit
    # estimate, so it is returned directly instead of iterating towards it.
    curve, table = km_fit(impute_midpoint(data))
    intervals = [TurnbullInterval(row.time, row.time, closed_left=True) for row in table.rows]
    previous = 1.0
    masses = []
    for row in table.rows:
        value = eval_curve(curve, row.time)
        masses.append(previous - value)
        previous = value
    if curve.final_value > 0:
        intervals.append(TurnbullInterval(curve.domain_end, np.inf))
        masses.append(curve.final_value)
    return TurnbullFit(tuple(intervals), tuple(masses), curve, 0, 0.0)


def turnbull_fit(
    data: Sequence[Observation],
    tol: float | None = None,
    max_iter: int | None = None,
    loglik_tol: float | None = None,
    on_iteration: Callable[[int, float], None] | None = None,
) -> TurnbullFit:
    """NPMLE of the survival function by self-consistency (EM) iterations.

    ``on_iteration`` receives ``(iteration, log_likelihood)`` before each update, which
    is how the monotone-likelihood property is checked. Iteration stops once the largest
    mass change drops below ``tol`` or an update gains less than ``loglik_tol`` times the
    absolute log-likelihood.
    """
    default_tol, default_loglik_tol, default_max_iter = get_turnbull_settings()
    tol = default_tol if tol is None else tol
    loglik_tol = default_loglik_tol if loglik_tol is None else loglik_tol
    max_iter = default_max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise ValueError(f"tol must be positive: {tol}")
    if loglik_tol < 0:
        raise ValueError(f"loglik_tol must be non-negative: {loglik_tol}")
    if not data:
        raise EstimationError("Turnbull fit needs at least one observation")
    if all(observation.is_censored for observation in data):
        raise EstimationError("Turnbull fit needs at least one non-censored observation")
    if not any(observation.is_interval for observation in data):
        return _product_limit_fit(data)

    intervals = turnbull_intervals(data)
    contains = _containment(data, intervals).astype(float)
    if (contains.sum(axis=1) == 0).any():
        raise EstimationError("an observation contains no Turnbull interval")

    n, m = contains.shape
    masses = np.full(m, 1.0 / m)
    change = np.inf
    previous_loglik = -np.inf
    for iteration in range(1, max_iter + 1):
        likelihoods = contains @ masses
        loglik = float(np.log(likelihoods).sum())
        if on_iteration is not None:
            on_iteration(iteration, loglik)
        updated = masses * (contains.T @ (1.0 / likelihoods)) / n
        change = float(np.abs(updated - masses).max())
        masses = updated
        gain = loglik - previous_loglik
        previous_loglik = loglik
        if change < tol or gain <= loglik_tol * abs(loglik):
            logger.debug("Turnbull EM converged in %s iterations", iteration)
            return TurnbullFit(
                intervals=intervals,
                masses=tuple(masses.tolist()),
                curve=_turnbull_curve(intervals, masses),
                iterations=iteration,
                final_change=change,
            )
    raise TurnbullConvergenceError(max_iter, change)


def fit_curve(
    data: Sequence[Observation], method: str
) -> tuple[SurvivalCurve, RiskTable | None]:
    """Estimate the survival curve of one arm with the named strategy.

    The risk table is returned for the product-limit routes and is ``None`` for
    Turnbull, which has no closed-form variance.
    """
    if method == METHOD_MIDPOINT_KM:
        return km_fit(impute_midpoint(data))
    if method == METHOD_RIGHTPOINT_KM:
        return km_fit(impute_rightpoint(data))
    if method == METHOD_TURNBULL:
        return turnbull_fit(data).curve, None
    raise ValueError(f"unknown estimation method: {method}")
