"""Observation, survival-curve and risk-table types shared by every estimator."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Slack allowed when checking monotonicity of curves assembled from floating-point sums
VALUE_TOLERANCE = 1e-9

STEP = "step"
LINEAR = "linear"


class ObservationKind(Enum):
    EXACT = "exact"
    INTERVAL = "interval"
    RIGHT_CENSORED = "right_censored"


@dataclass(frozen=True)
class Observation:
    """One subject's outcome.

    ``left``/``right`` hold t for exact events, (l, r] for interval observations, and
    ``left`` alone holds the last event-free time c for right-censored subjects.
    """

    kind: ObservationKind
    left: float
    right: float | None
    arm: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.left) or self.left < 0:
            raise ValueError(f"observation time must be finite and non-negative: {self.left}")
        if self.arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1: {self.arm}")
        if self.kind is ObservationKind.RIGHT_CENSORED:
            if self.right is not None:
                raise ValueError("right-censored observations carry no right endpoint")
            return
        if self.right is None or not math.isfinite(self.right):
            raise ValueError(f"{self.kind.value} observation needs a finite right endpoint")
        if self.kind is ObservationKind.EXACT and self.right != self.left:
            raise ValueError("exact observations have left == right")
        if self.kind is ObservationKind.EXACT and self.left == 0:
            raise ValueError("exact event times must be positive; every curve starts at 1")
        if self.kind is ObservationKind.INTERVAL and not self.left < self.right:
            raise ValueError(f"interval requires l < r, got ({self.left}, {self.right}]")

    @classmethod
    def exact(cls, t: float, arm: int = 0) -> Observation:
        return cls(ObservationKind.EXACT, float(t), float(t), arm)

    @classmethod
    def interval(cls, left: float, right: float, arm: int = 0) -> Observation:
        return cls(ObservationKind.INTERVAL, float(left), float(right), arm)

    @classmethod
    def right_censored(cls, c: float, arm: int = 0) -> Observation:
        return cls(ObservationKind.RIGHT_CENSORED, float(c), None, arm)

    @property
    def is_exact(self) -> bool:
        return self.kind is ObservationKind.EXACT

    @property
    def is_interval(self) -> bool:
        return self.kind is ObservationKind.INTERVAL

    @property
    def is_censored(self) -> bool:
        return self.kind is ObservationKind.RIGHT_CENSORED


@dataclass(frozen=True)
class Segment:
    """Piece of a survival curve on [start, end).

    ``end_value`` is the left limit at ``end``; a drop at ``end`` shows up as the next
    segment starting lower. Step segments hold ``start_value`` throughout.
    """

    start: float
    end: float
    start_value: float
    end_value: float
    shape: str = STEP

    def value_at(self, t: float) -> float:
        if self.shape == STEP:
            return self.start_value
        fraction = (t - self.start) / (self.end - self.start)
        return self.start_value + fraction * (self.end_value - self.start_value)

    def area(self, a: float, b: float) -> float:
        """Exact integral over [a, b] ⊆ [start, end]."""
        if b <= a:
            return 0.0
        if self.shape == STEP:
            return self.start_value * (b - a)
        return 0.5 * (self.value_at(a) + self.value_at(b)) * (b - a)


@dataclass(frozen=True)
class SurvivalCurve:
    segments: tuple[Segment, ...]
    final_value: float

    def __post_init__(self) -> None:
        previous_end = 0.0
        previous_value = 1.0
        for segment in self.segments:
            if segment.shape not in (STEP, LINEAR):
                raise ValueError(f"unknown segment shape: {segment.shape}")
            if segment.start != previous_end:
                raise ValueError(f"segments must tile the time axis; gap at {previous_end}")
            if not segment.end > segment.start:
                raise ValueError(f"segment times must strictly increase at {segment.start}")
            if segment.shape == STEP and segment.end_value != segment.start_value:
                raise ValueError("step segments are constant")
            if segment.start_value > previous_value + VALUE_TOLERANCE:
                raise ValueError(f"curve increases at t={segment.start}")
            if segment.end_value > segment.start_value + VALUE_TOLERANCE:
                raise ValueError(f"curve increases inside segment at t={segment.start}")
            if segment.end_value < -VALUE_TOLERANCE:
                raise ValueError("curve values must lie in [0, 1]")
            previous_end = segment.end
            previous_value = segment.end_value
        if self.segments and self.segments[0].start_value != 1.0:
            raise ValueError("survival curves start at 1")
        if self.final_value > previous_value + VALUE_TOLERANCE or self.final_value < 0:
            raise ValueError(f"invalid final value {self.final_value}")
        if not self.segments and self.final_value != 1.0:
            raise ValueError("a curve without segments is identically 1")

    @property
    def domain_end(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(segment.start for segment in self.segments) + (self.domain_end,)

    @property
    def is_step(self) -> bool:
        return all(segment.shape == STEP for segment in self.segments)


def step_curve(times, values) -> SurvivalCurve:
    """Right-continuous step curve dropping to ``values[k]`` at ``times[k]``.

    An empty ``times`` gives the constant curve S ≡ 1.
    """
    times = [float(t) for t in times]
    values = [float(v) for v in values]
    if len(times) != len(values):
        raise ValueError("times and values differ in length")
    segments: list[Segment] = []
    start, level = 0.0, 1.0
    for t, value in zip(times, values):
        if t <= start:
            raise ValueError(f"drop times must be positive and increasing: {t}")
        segments.append(Segment(start, t, level, level, STEP))
        start, level = t, max(value, 0.0)
    return SurvivalCurve(tuple(segments), level)


def _segment_index(curve: SurvivalCurve, t: float) -> int:
    starts = [segment.start for segment in curve.segments]
    return bisect_right(starts, t) - 1


def eval_curve(curve: SurvivalCurve, t: float) -> float:
    """S(t), carrying the final value past the last knot."""
    if t < 0:
        raise ValueError(f"t must be non-negative: {t}")
    if t >= curve.domain_end:
        return curve.final_value
    return curve.segments[_segment_index(curve, t)].value_at(t)


def left_limit(curve: SurvivalCurve, t: float) -> float:
    """S(t−), the value just before ``t``."""
    if t <= 0:
        return 1.0
    if t > curve.domain_end:
        return curve.final_value
    ends = [segment.end for segment in curve.segments]
    segment = curve.segments[bisect_left(ends, t)]
    if t == segment.end:
        return segment.end_value
    return segment.value_at(t)


def integrate_curve(curve: SurvivalCurve, a: float, b: float) -> float:
    """Exact area under the curve on [a, b]."""
    if a < 0:
        raise ValueError(f"a must be non-negative: {a}")
    if a > b:
        raise ValueError(f"integration bounds out of order: a={a} > b={b}")
    total = 0.0
    if a < curve.domain_end:
        for segment in curve.segments[_segment_index(curve, a) :]:
            if segment.start >= b:
                break
            total += segment.area(max(a, segment.start), min(b, segment.end))
    if b > curve.domain_end:
        total += curve.final_value * (b - max(a, curve.domain_end))
    return total


@dataclass(frozen=True)
class RiskRow:
    time: float
    events: int
    at_risk: int


@dataclass(frozen=True)
class RiskTable:
    rows: tuple[RiskRow, ...]

    def __post_init__(self) -> None:
        previous_time = -math.inf
        previous_at_risk = math.inf
        for row in self.rows:
            if not row.time > previous_time:
                raise ValueError("risk table times must strictly increase")
            if row.events < 1 or row.at_risk < row.events:
                raise ValueError(f"invalid counts at t={row.time}: d={row.events}, r={row.at_risk}")
            if row.at_risk > previous_at_risk:
                raise ValueError("at-risk counts cannot grow over time")
            previous_time = row.time
            previous_at_risk = row.at_risk

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def times(self) -> np.ndarray:
        return np.array([row.time for row in self.rows], dtype=float)

    @property
    def events(self) -> np.ndarray:
        return np.array([row.events for row in self.rows], dtype=float)

    @property
    def at_risk(self) -> np.ndarray:
        return np.array([row.at_risk for row in self.rows], dtype=float)
