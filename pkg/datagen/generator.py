"""Interval-censored trial generator.

Each subject gets a jittered exam schedule on [0, 1), an event time drawn from the
arm's law, and independent attendance at every follow-up exam. The observation is the
shortest attended interval covering the event, an exact time when the subject's
exact-flag is set and the event falls before the end of the study, or a right-censoring
at the last attended exam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from constants import DROPOUT_RATES, STUDY_HORIZON
from curves import Observation
from datagen.laws import ArmLaw, sample_event_times

if TYPE_CHECKING:
    from study_config import StudyConfig


@dataclass(frozen=True)
class VisitPlan:
    k: int
    dropout: tuple[float, ...]
    p_exact: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"K must be at least 1: {self.k}")
        if len(self.dropout) != self.k:
            raise ValueError(f"dropout needs {self.k} probabilities, got {len(self.dropout)}")
        if any(not 0 <= rate <= 1 for rate in self.dropout):
            raise ValueError(f"dropout probabilities must lie in [0, 1]: {self.dropout}")
        if not 0 <= self.p_exact <= 1:
            raise ValueError(f"p_exact must lie in [0, 1]: {self.p_exact}")


def dropout_profile(name: str, k: int) -> tuple[float, ...]:
    """Named dropout vector; the final exam is missed twice as often as the others."""
    if k < 1:
        raise ValueError(f"K must be at least 1: {k}")
    try:
        rate = DROPOUT_RATES[name]
    except KeyError:
        known = ", ".join(DROPOUT_RATES)
        raise ValueError(f"unknown dropout profile {name!r}; expected one of: {known}") from None
    return (rate,) * (k - 1) + (min(2.0 * rate, 1.0),)


def schedule_from_baseline(g0: float, k: int) -> np.ndarray:
    return g0 + np.arange(k + 1) / (k + 1)


def make_schedule(rng: np.random.Generator, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError(f"K must be at least 1: {k}")
    return schedule_from_baseline(rng.uniform(0.0, 1.0 / (k + 1)), k)


def censor_observation(
    t: float,
    schedule: Sequence[float],
    attended: Sequence[bool],
    xi: bool,
    arm: int = 0,
) -> Observation:
    times = np.asarray(schedule, dtype=float)
    flags = np.asarray(attended, dtype=bool).copy()
    flags[0] = True  # baseline is always attended
    visited = times[flags]
    if xi:
        # Exact events are seen up to the end of the study
        if t <= STUDY_HORIZON:
            return Observation.exact(t, arm)
        return Observation.right_censored(float(visited.max()), arm)

    later = visited[visited >= t]
    if later.size == 0:
        return Observation.right_censored(visited.max(), arm)
    earlier = visited[visited < t]
    left = float(earlier.max()) if earlier.size else 0.0
    return Observation.interval(left, float(later.min()), arm)


def generate_arm(
    rng: np.random.Generator, law: ArmLaw, plan: VisitPlan, n: int, arm: int = 0
) -> list[Observation]:
    """Draw ``n`` subjects of one arm.

    Draw order is fixed (baselines, event times, attendance, exact-flags) so a given
    stream always yields the same arm.
    """
    if n < 1:
        raise ValueError(f"n must be positive: {n}")
    baselines = rng.uniform(0.0, 1.0 / (plan.k + 1), size=n)
    event_times = sample_event_times(rng, law, n)
    attendance = rng.random((n, plan.k)) >= np.asarray(plan.dropout)
    exact_flags = rng.random(n) < plan.p_exact

    observations = []
    for i in range(n):
        attended = np.concatenate([[True], attendance[i]])
        observations.append(
            censor_observation(
                float(event_times[i]),
                schedule_from_baseline(baselines[i], plan.k),
                attended,
                bool(exact_flags[i]),
                arm,
            )
        )
    return observations


def generate_trial(config: StudyConfig, rng: np.random.Generator) -> list[Observation]:
    """One simulated trial: arm 0 only for estimation studies, arm 0 then arm 1 otherwise."""
    observations: list[Observation] = []
    for arm in config.arms:
        law = config.scenario.law(arm)
        observations.extend(generate_arm(rng, law, config.plan, config.n, arm))
    return observations
