"""Registry of two-arm event-time scenarios on the unit study horizon.

Ids follow ``<shape>-<roman numeral>`` for the seventeen test scenarios and
``weibull-<scale>-<shape>`` for the single-law settings of the estimation studies.
"""

from __future__ import annotations

from dataclasses import dataclass

from datagen.laws import ArmLaw, PiecewiseLinearHazardLaw, WeibullLaw

NULL = "null"
PH = "ph"
NPH = "nph"


@dataclass(frozen=True)
class ScenarioSpec:
    label: str
    control: ArmLaw
    treatment: ArmLaw
    hypothesis: str = NULL
    description: str = ""

    def law(self, arm: int) -> ArmLaw:
        return self.treatment if arm == 1 else self.control

    @property
    def is_null(self) -> bool:
        return self.control == self.treatment


def _same(label: str, law: ArmLaw, description: str) -> ScenarioSpec:
    return ScenarioSpec(label, law, law, NULL, description)


def _pwlh(*pieces: tuple[float, float, float, float]) -> PiecewiseLinearHazardLaw:
    return PiecewiseLinearHazardLaw.from_pieces(*pieces)


_REGISTRY = (
    # Null hypotheses
    _same("weibull-i", WeibullLaw(1, 1), "constant hazard"),
    _same("weibull-ii", WeibullLaw(1, 0.5), "decreasing hazard"),
    _same("weibull-iii", WeibullLaw(1, 2), "increasing hazard"),
    _same("pwlh-iv", _pwlh((0, 0.5, 2, 2), (0.5, 1, 1, 1)), "hazard 2 then 1"),
    _same("pwlh-v", _pwlh((0, 0.5, 1, 1), (0.5, 1, 1, 2)), "hazard 1 then 2t"),
    # Proportional hazards
    ScenarioSpec("weibull-vi", WeibullLaw(0.5, 1), WeibullLaw(1, 1), PH, "hazard ratio 1/2"),
    ScenarioSpec(
        "weibull-vii", WeibullLaw(0.5, 0.5), WeibullLaw(1, 0.5), PH, "decreasing hazards"
    ),
    ScenarioSpec("weibull-viii", WeibullLaw(0.75, 2), WeibullLaw(1, 2), PH, "increasing hazards"),
    ScenarioSpec(
        "pwlh-ix",
        _pwlh((0, 0.5, 3, 3), (0.5, 1, 1.5, 1.5)),
        _pwlh((0, 0.5, 2, 2), (0.5, 1, 1, 1)),
        PH,
        "step hazards, ratio 2/3",
    ),
    ScenarioSpec(
        "pwlh-x",
        _pwlh((0, 0.5, 1.5, 1.5), (0.5, 1, 1.5, 3)),
        _pwlh((0, 0.5, 1, 1), (0.5, 1, 1, 2)),
        PH,
        "flat then rising hazards, ratio 2/3",
    ),
    # Non-proportional hazards
    ScenarioSpec(
        "early-diff-xi",
        _pwlh((0, 0.5, 1.75, 1.75), (0.5, 1, 1.75, 2.25)),
        _pwlh((0, 0.5, 0.25, 1.75), (0.5, 1, 1.75, 2.25)),
        NPH,
        "early difference",
    ),
    ScenarioSpec(
        "late-diff-xii",
        _pwlh((0, 0.2, 2, 2), (0.2, 1, 2, 5.2)),
        _pwlh((0, 0.2, 2, 2), (0.2, 1, 2, 0.4)),
        NPH,
        "late difference",
    ),
    ScenarioSpec(
        "cross-hazard-xiii",
        _pwlh((0, 1, 2, 0.5)),
        _pwlh((0, 1, 0.5, 2)),
        NPH,
        "linearly crossing hazards",
    ),
    ScenarioSpec(
        "cross-hazard-xiv",
        _pwlh((0, 0.5, 1.5, 1.5), (0.5, 1, 0.5, 0.5)),
        _pwlh((0, 0.5, 0.5, 1), (0.5, 1, 1, 1.5)),
        NPH,
        "step-down versus rising hazard",
    ),
    ScenarioSpec(
        "cross-early-xv",
        _pwlh((0, 0.2, 1, 3), (0.2, 1, 3, 3)),
        _pwlh((0, 0.2, 3, 1), (0.2, 1, 1, 1)),
        NPH,
        "survival curves cross early",
    ),
    ScenarioSpec(
        "cross-middle-xvi",
        _pwlh((0, 0.25, 1, 1), (0.25, 1, 3, 3)),
        _pwlh((0, 0.25, 2, 2), (0.25, 1, 2, 2)),
        NPH,
        "survival curves cross mid-study",
    ),
    ScenarioSpec(
        "cross-late-xvii",
        _pwlh((0, 0.8, 1, 3), (0.8, 1, 3, 3)),
        _pwlh((0, 0.8, 3, 1), (0.8, 1, 1, 1)),
        NPH,
        "survival curves cross late",
    ),
    # Single-law settings for estimation studies
    _same("weibull-1-1", WeibullLaw(1, 1), "estimation default"),
    _same("weibull-1-0.5", WeibullLaw(1, 0.5), "decreasing hazard"),
    _same("weibull-1-2", WeibullLaw(1, 2), "increasing hazard"),
    _same("weibull-1-3", WeibullLaw(1, 3), "steeply increasing hazard"),
    _same("weibull-0.5-1", WeibullLaw(0.5, 1), "high constant hazard"),
    _same("weibull-2-1", WeibullLaw(2, 1), "low constant hazard"),
)

SCENARIOS: dict[str, ScenarioSpec] = {scenario.label: scenario for scenario in _REGISTRY}

# The seventeen two-sample scenarios in table order
TEST_SCENARIO_IDS = tuple(scenario.label for scenario in _REGISTRY[:17])


def get_scenario(scenario_id: str) -> ScenarioSpec:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise ValueError(f"unknown scenario {scenario_id!r}; expected one of: {known}") from None
