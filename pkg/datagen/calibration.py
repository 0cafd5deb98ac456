"""δ-calibrated two-arm scenario families used by the τ0 / x / δ power sweeps.

late-difference
    Both arms share hazard 2 on [0, x). Afterwards the control hazard rises as
    2 + 2s(t − x) and the treatment hazard falls as 2 − s(t − x) until it reaches 0;
    s = 2, x = 0.2 is the late-difference scenario of the registry.
early-crossing
    On [0, x) the control hazard climbs linearly from 2 − a to 2 + a while the treatment
    hazard falls from 2 + a to 2 − a, so the survival curves cross at x. Afterwards both
    stay flat at 2 + a and 2 − a; a = 1, x = 0.2 is the early-crossing scenario.

The free parameter (s or a) is solved so that |RMST₁(0, 1) − RMST₀(0, 1)| = δ.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from constants import STUDY_HORIZON
from datagen.laws import PiecewiseLinearHazardLaw, true_mean_survival
from datagen.scenarios import NPH, NULL, ScenarioSpec

logger = logging.getLogger(__name__)

LATE_DIFFERENCE = "late-difference"
EARLY_CROSSING = "early-crossing"
FAMILIES = (LATE_DIFFERENCE, EARLY_CROSSING)

BASE_HAZARD = 2.0
# Steepest late-difference slope tried; the control arm is then nearly exhausted after x
MAX_LATE_SLOPE = 200.0
CALIBRATION_TOL = 1e-6
# Grid used to bracket the first root before handing it to brentq
_BRACKET_POINTS = 81


class CalibrationError(RuntimeError):
    """Raised when no admissible hazard parameter reaches the requested RMST difference."""


def _late_difference(x: float, s: float) -> tuple[PiecewiseLinearHazardLaw, ...]:
    tail = 1.0 - x
    control = PiecewiseLinearHazardLaw.from_pieces(
        (0, x, BASE_HAZARD, BASE_HAZARD), (x, 1, BASE_HAZARD, BASE_HAZARD + 2 * s * tail)
    )
    # The treatment hazard stops at 0 once the falling line reaches it
    zero_at = x + BASE_HAZARD / s if s > 0 else 1.0
    if zero_at >= 1.0:
        treatment = PiecewiseLinearHazardLaw.from_pieces(
            (0, x, BASE_HAZARD, BASE_HAZARD), (x, 1, BASE_HAZARD, BASE_HAZARD - s * tail)
        )
    else:
        treatment = PiecewiseLinearHazardLaw.from_pieces(
            (0, x, BASE_HAZARD, BASE_HAZARD), (x, zero_at, BASE_HAZARD, 0), (zero_at, 1, 0, 0)
        )
    return control, treatment


def _early_crossing(x: float, a: float) -> tuple[PiecewiseLinearHazardLaw, ...]:
    low, high = BASE_HAZARD - a, BASE_HAZARD + a
    control = PiecewiseLinearHazardLaw.from_pieces((0, x, low, high), (x, 1, high, high))
    treatment = PiecewiseLinearHazardLaw.from_pieces((0, x, high, low), (x, 1, low, low))
    return control, treatment


_BUILDERS: dict[str, Callable[[float, float], tuple[PiecewiseLinearHazardLaw, ...]]] = {
    LATE_DIFFERENCE: _late_difference,
    EARLY_CROSSING: _early_crossing,
}


def _upper_parameter(family: str) -> float:
    if family == LATE_DIFFERENCE:
        return MAX_LATE_SLOPE
    return BASE_HAZARD


def rmst_gap(family: str, x: float, parameter: float) -> float:
    """|RMST₁ − RMST₀| over the study horizon for one member of a family."""
    control, treatment = _BUILDERS[family](x, parameter)
    return abs(
        true_mean_survival(treatment, 0.0, STUDY_HORIZON)
        - true_mean_survival(control, 0.0, STUDY_HORIZON)
    )


def calibrate_scenario(family: str, x: float, delta: float) -> ScenarioSpec:
    if family not in _BUILDERS:
        raise ValueError(f"unknown scenario family {family!r}; expected one of: {FAMILIES}")
    if not 0 < x < 1:
        raise ValueError(f"x must lie in (0, 1): {x}")
    if delta < 0:
        raise ValueError(f"delta must be non-negative: {delta}")

    label = f"{family}-x{x:g}-d{delta:g}"
    if delta == 0:
        control, _ = _BUILDERS[family](x, 0.0)
        return ScenarioSpec(label, control, control, NULL, f"{family} null embedding")

    grid = np.linspace(0.0, _upper_parameter(family), _BRACKET_POINTS)
    gaps = np.array([rmst_gap(family, x, value) for value in grid]) - delta
    above = np.flatnonzero(gaps >= 0)
    if above.size == 0:
        raise CalibrationError(
            f"{family} at x={x:g} reaches at most an RMST difference of "
            f"{gaps.max() + delta:.4f} < {delta:g}"
        )
    upper = int(above[0])
    if gaps[upper] == 0:
        parameter = float(grid[upper])
    else:
        parameter = brentq(
            lambda value: rmst_gap(family, x, value) - delta,
            grid[upper - 1],
            grid[upper],
            xtol=1e-12,
        )
    control, treatment = _BUILDERS[family](x, parameter)
    achieved = rmst_gap(family, x, parameter)
    if abs(achieved - delta) > CALIBRATION_TOL:
        raise CalibrationError(
            f"{family} at x={x:g}: calibrated RMST difference {achieved:.8f} misses {delta:g}"
        )
    logger.debug("Calibrated %s x=%s delta=%s with parameter %.6f", family, x, delta, parameter)
    return ScenarioSpec(label, control, treatment, NPH, f"{family} parameter {parameter:.6f}")
