"""Restricted and window mean survival time: estimates, variances and the two-sample test."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import norm

from constants import TEST_RMST, TEST_WMST, Z_975
from curves import RiskTable, SurvivalCurve, integrate_curve
from estimators import EstimationError, PointDatum, greenwood_terms, km_fit

logger = logging.getLogger(__name__)


class DegenerateTestError(RuntimeError):
    """Raised when a test statistic has a zero standard error."""


@dataclass(frozen=True)
class Window:
    tau0: float
    tau1: float

    def __post_init__(self) -> None:
        if not (0 <= self.tau0 < self.tau1) or not math.isfinite(self.tau1):
            raise ValueError(f"invalid window [{self.tau0}, {self.tau1}]")

    @property
    def width(self) -> float:
        return self.tau1 - self.tau0


@dataclass(frozen=True)
class WmstEstimate:
    value: float
    variance: float
    window: Window
    n_used: int
    extrapolated: bool = False

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class Effect:
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    effect: Effect | None = None


def two_sided_p(statistic: float) -> float:
    return min(1.0, float(2.0 * norm.sf(abs(statistic))))


def wmst(curve: SurvivalCurve, window: Window) -> float:
    return integrate_curve(curve, window.tau0, window.tau1)


def rmst(curve: SurvivalCurve, tau1: float) -> float:
    return wmst(curve, Window(0.0, tau1))


def wmst_variance(curve: SurvivalCurve, table: RiskTable, window: Window) -> float:
    """Greenwood-based variance of the window integral of a product-limit curve.

    The value held on each window sub-interval carries the Greenwood variance of the
    curve just after its left knot, and pairs of sub-intervals carry the matching
    covariance. Collecting terms per event time gives
    Σ_k d_k / (r_k (r_k − d_k)) · (∫_{max(t_k, τ0)}^{τ1} Ŝ)².
    """
    if not curve.is_step:
        raise ValueError("closed-form WMST variance needs a step (Kaplan-Meier) curve")
    total = 0.0
    for row, term in zip(table.rows, greenwood_terms(table)):
        if row.time >= window.tau1:
            break
        area = integrate_curve(curve, max(row.time, window.tau0), window.tau1)
        if area == 0:
            continue
        if math.isinf(term):
            raise EstimationError(
                f"risk set exhausted at t={row.time} but the curve is still positive"
            )
        total += term * area * area
    return total


def estimate_wmst(data: Sequence[PointDatum], window: Window) -> WmstEstimate:
    curve, table = km_fit(data)
    last_observed = max(datum.time for datum in data)
    extrapolated = window.tau1 > last_observed
    if extrapolated:
        logger.debug(
            "tau1=%s exceeds the largest observed time %s; carrying the last curve value",
            window.tau1,
            last_observed,
        )
    return WmstEstimate(
        value=wmst(curve, window),
        variance=wmst_variance(curve, table, window),
        window=window,
        n_used=len(data),
        extrapolated=extrapolated,
    )


def wmst_diff_test(
    arm0: Sequence[PointDatum], arm1: Sequence[PointDatum], window: Window
) -> TestResult:
    """Z test of WMST(arm 1) − WMST(arm 0); an RMST test when ``tau0`` is 0."""
    if not arm0 or not arm1:
        raise ValueError("both arms need at least one observation")
    estimate0 = estimate_wmst(arm0, window)
    estimate1 = estimate_wmst(arm1, window)
    difference = estimate1.value - estimate0.value
    std_error = math.sqrt(estimate0.variance + estimate1.variance)
    if std_error == 0:
        raise DegenerateTestError(
            f"no events inside [{window.tau0}, {window.tau1}] in either arm"
        )
    statistic = difference / std_error
    return TestResult(
        method=TEST_RMST if window.tau0 == 0 else TEST_WMST,
        statistic=statistic,
        p_value=two_sided_p(statistic),
        effect=Effect(
            estimate=difference,
            std_error=std_error,
            ci_low=difference - Z_975 * std_error,
            ci_high=difference + Z_975 * std_error,
        ),
    )


def select_tau1(arm0: Sequence[PointDatum], arm1: Sequence[PointDatum]) -> float:
    """Smaller of the two arms' largest observed times, events and censorings alike."""
    if not arm0 or not arm1:
        raise ValueError("both arms need at least one observation")
    return min(max(datum.time for datum in arm0), max(datum.time for datum in arm1))
