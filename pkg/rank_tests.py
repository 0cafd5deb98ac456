"""Weighted log-rank tests: the log-rank test and the Fleming-Harrington family."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from constants import TEST_FH, TEST_LOGRANK
from estimators import PointDatum
from mean_survival import DegenerateTestError, TestResult, two_sided_p


@dataclass(frozen=True)
class WeightFunction:
    """w(t) = Ŝ(t−)^p (1 − Ŝ(t−))^q on the pooled Kaplan-Meier left limit."""

    p: float = 0.0
    q: float = 0.0

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0:
            raise ValueError(f"Fleming-Harrington exponents must be non-negative: {self}")

    @property
    def name(self) -> str:
        if self.p == 0 and self.q == 0:
            return TEST_LOGRANK
        return f"{TEST_FH}({self.p:g},{self.q:g})"

    def __call__(self, s_minus: np.ndarray) -> np.ndarray:
        return np.power(s_minus, self.p) * np.power(1.0 - s_minus, self.q)


def fh_weight(p: float, q: float) -> WeightFunction:
    return WeightFunction(float(p), float(q))


def logrank_weight() -> WeightFunction:
    return fh_weight(0, 0)


@dataclass(frozen=True)
class WrtAccumulator:
    """Per distinct pooled event time: observed and expected treatment events,
    hypergeometric variance, weight and pooled Ŝ(t−)."""

    times: np.ndarray
    observed: np.ndarray
    expected: np.ndarray
    variance: np.ndarray
    weights: np.ndarray
    s_minus: np.ndarray

    @property
    def score(self) -> float:
        return float(np.sum(self.weights * (self.observed - self.expected)))

    @property
    def score_variance(self) -> float:
        return float(np.sum(self.weights**2 * self.variance))


def _as_arrays(data: Sequence[PointDatum]) -> tuple[np.ndarray, np.ndarray]:
    times = np.array([datum.time for datum in data], dtype=float)
    events = np.array([datum.event for datum in data], dtype=bool)
    return times, events


def wrt_accumulate(
    arm0: Sequence[PointDatum], arm1: Sequence[PointDatum], weight: WeightFunction
) -> WrtAccumulator:
    """One 2×2 table per distinct pooled event time, events before censorings on ties."""
    times0, events0 = _as_arrays(arm0)
    times1, events1 = _as_arrays(arm1)
    pooled_times = np.concatenate([times0, times1])
    pooled_events = np.concatenate([events0, events1])

    event_times, deaths = np.unique(pooled_times[pooled_events], return_counts=True)
    treatment_event_times, treatment_deaths = np.unique(times1[events1], return_counts=True)
    observed = np.zeros(event_times.size)
    observed[np.searchsorted(event_times, treatment_event_times)] = treatment_deaths

    at_risk = pooled_times.size - np.searchsorted(np.sort(pooled_times), event_times, "left")
    treatment_at_risk = times1.size - np.searchsorted(np.sort(times1), event_times, "left")

    share = treatment_at_risk / at_risk
    expected = deaths * share
    with np.errstate(divide="ignore", invalid="ignore"):
        correction = np.where(at_risk > 1, (at_risk - deaths) / (at_risk - 1), 0.0)
    variance = deaths * share * (1.0 - share) * correction

    pooled_survival = np.cumprod(1.0 - deaths / at_risk)
    s_minus = np.concatenate([[1.0], pooled_survival[:-1]])

    return WrtAccumulator(
        times=event_times,
        observed=observed,
        expected=expected,
        variance=variance,
        weights=weight(s_minus),
        s_minus=s_minus,
    )


def weighted_logrank(
    arm0: Sequence[PointDatum], arm1: Sequence[PointDatum], weight: WeightFunction
) -> TestResult:
    """Z = Σ w_t (o_t − e_t) / √(Σ w_t² v_t), counting treatment-arm events."""
    if not arm0 or not arm1:
        raise ValueError("both arms need at least one observation")
    accumulator = wrt_accumulate(arm0, arm1, weight)
    if accumulator.times.size == 0:
        raise DegenerateTestError("no events in either arm")
    denominator = accumulator.score_variance
    if denominator <= 0:
        raise DegenerateTestError(f"{weight.name} statistic has zero variance")
    statistic = accumulator.score / math.sqrt(denominator)
    return TestResult(method=weight.name, statistic=statistic, p_value=two_sided_p(statistic))
