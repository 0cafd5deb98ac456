"""Study configuration: the JSON study files under ``studies/`` and their typed form.

A study file looks like::

    {
      "schema": 1,
      "name": "estimation-default",
      "kind": "estimation",            # estimation | estimation-grid | test | sweep
      "scenario": "weibull-1-1",       # one id or a list of ids
      "n": 100,
      "plan": {"k": 5, "dropout": "Medium", "p_exact": 0.0},
      "window": {"tau0": [0.25, 0.5], "tau1": 1.0},   # tau1 may be "auto"
      "replications": 2000,
      "seed": 20240917,
      "methods": ["midpoint-km", "rightpoint-km", "turnbull"],
      "tests": ["rmst", "wmst:0.5", "logrank", "fh:0:1"],
      "sweep": {"family": "late-difference", "x": [0.1], "tau0": [0.5], "delta": [0.1]},
      "grid": {"n": [100, 200, 400]}
    }

Only ``schema``, ``kind`` and ``scenario`` are required (``sweep`` for sweep studies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator, Mapping, Union

import yaml

from config import get_default_replications
from constants import (
    DEFAULT_DROPOUT,
    DEFAULT_ESTIMATION_SCENARIO,
    DEFAULT_K,
    DEFAULT_N,
    DEFAULT_P_EXACT,
    ESTIMATION_METHODS,
    STUDY_HORIZON,
    TEST_FH,
    TEST_LOGRANK,
    TEST_RMST,
    TEST_WMST,
)
from datagen.calibration import FAMILIES
from datagen.generator import VisitPlan, dropout_profile
from datagen.scenarios import ScenarioSpec, get_scenario

SCHEMA_VERSION = 1
DEFAULT_SEED = 20240917

KIND_ESTIMATION = "estimation"
KIND_ESTIMATION_GRID = "estimation-grid"
KIND_TEST = "test"
KIND_SWEEP = "sweep"
STUDY_KINDS = (KIND_ESTIMATION, KIND_ESTIMATION_GRID, KIND_TEST, KIND_SWEEP)

GRID_FACTORS = ("scenario", "dropout", "n", "k", "p_exact")
K_NEEDS_PROFILE = "varying k needs a named plan.dropout profile, not a list of rates"

_TOP_LEVEL_KEYS = {
    "schema",
    "name",
    "kind",
    "scenario",
    "n",
    "plan",
    "window",
    "replications",
    "seed",
    "methods",
    "tests",
    "sweep",
    "grid",
}

Dropout = Union[str, tuple[float, ...]]


class StudyConfigError(ValueError):
    """Raised when a study file violates the schema; the message names the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class TestSpec:
    kind: str
    tau0: float = 0.0
    p: float = 0.0
    q: float = 0.0

    @property
    def label(self) -> str:
        if self.kind == TEST_WMST:
            return f"{TEST_WMST}({self.tau0:g})"
        if self.kind == TEST_FH:
            return f"{TEST_FH}({self.p:g},{self.q:g})"
        return self.kind

    @property
    def is_mean_survival(self) -> bool:
        return self.kind in (TEST_RMST, TEST_WMST)


def parse_test_spec(text: str) -> TestSpec:
    """Parse ``rmst``, ``wmst:<tau0>``, ``logrank`` or ``fh:<p>:<q>``."""
    parts = [part.strip() for part in str(text).strip().lower().split(":")]
    kind, args = parts[0], parts[1:]
    try:
        if kind in (TEST_RMST, TEST_LOGRANK) and not args:
            return TestSpec(kind)
        if kind == TEST_WMST and len(args) == 1:
            tau0 = float(args[0])
            if tau0 < 0 or not math.isfinite(tau0):
                raise ValueError
            return TestSpec(TEST_WMST, tau0=tau0)
        if kind == TEST_FH and len(args) == 2:
            p, q = float(args[0]), float(args[1])
            if p < 0 or q < 0:
                raise ValueError
            return TestSpec(TEST_FH, p=p, q=q)
    except ValueError:
        pass
    raise ValueError(f"invalid test {text!r}; expected rmst, wmst:<tau0>, logrank or fh:<p>:<q>")


@dataclass(frozen=True)
class SweepSpec:
    family: str
    xs: tuple[float, ...]
    tau0s: tuple[float, ...]
    deltas: tuple[float, ...]


def _default_scenarios() -> tuple[ScenarioSpec, ...]:
    return (get_scenario(DEFAULT_ESTIMATION_SCENARIO),)


@dataclass(frozen=True)
class StudyConfig:
    name: str = "study"
    kind: str = KIND_ESTIMATION
    scenarios: tuple[ScenarioSpec, ...] = field(default_factory=_default_scenarios)
    n: int = DEFAULT_N
    k: int = DEFAULT_K
    dropout: Dropout = DEFAULT_DROPOUT
    p_exact: float = DEFAULT_P_EXACT
    tau0s: tuple[float, ...] = (0.25, 0.5)
    # None selects τ1 per replication with the min-max rule
    tau1: float | None = STUDY_HORIZON
    replications: int = 2000
    seed: int = DEFAULT_SEED
    methods: tuple[str, ...] = ESTIMATION_METHODS
    tests: tuple[TestSpec, ...] = ()
    sweep: SweepSpec | None = None
    grid: tuple[tuple[str, tuple[Any, ...]], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown study kind: {self.kind}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2: {self.n}")
        if self.replications < 1:
            raise ValueError(f"replications must be positive: {self.replications}")
        if not self.scenarios:
            raise ValueError("a study needs at least one scenario")
        if self.tau1 is not None and any(tau0 >= self.tau1 for tau0 in self.tau0s):
            raise ValueError(f"every tau0 must lie below tau1={self.tau1}: {self.tau0s}")

    @property
    def plan(self) -> VisitPlan:
        if isinstance(self.dropout, str):
            rates = dropout_profile(self.dropout, self.k)
        else:
            rates = tuple(self.dropout)
        return VisitPlan(self.k, rates, self.p_exact)

    @property
    def arms(self) -> tuple[int, ...]:
        if self.kind in (KIND_ESTIMATION, KIND_ESTIMATION_GRID):
            return (0,)
        return (0, 1)

    @property
    def scenario(self) -> ScenarioSpec:
        if len(self.scenarios) != 1:
            raise ValueError(f"study {self.name!r} holds {len(self.scenarios)} scenarios")
        return self.scenarios[0]

    def for_each_scenario(self) -> Iterator[StudyConfig]:
        for scenario in self.scenarios:
            yield replace(self, scenarios=(scenario,))


def _get_int(doc: Mapping, key: str, path: str, default: int, minimum: int) -> int:
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise StudyConfigError(f"{path}{key}", f"expected an integer, got {value!r}")
    if value < minimum:
        raise StudyConfigError(f"{path}{key}", f"must be at least {minimum}, got {value}")
    return value


def _as_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise StudyConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise StudyConfigError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _as_list(value: Any, path: str) -> list:
    if isinstance(value, list):
        if not value:
            raise StudyConfigError(path, "must not be empty")
        return value
    return [value]


def _float_list(value: Any, path: str) -> tuple[float, ...]:
    items = _as_list(value, path)
    if len(items) == 1 and not isinstance(value, list):
        return (_as_float(items[0], path),)
    return tuple(_as_float(item, f"{path}[{i}]") for i, item in enumerate(items))


def _mapping(doc: Mapping, key: str) -> Mapping:
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        raise StudyConfigError(key, f"expected an object, got {value!r}")
    return value


def _parse_scenarios(value: Any) -> tuple[ScenarioSpec, ...]:
    items = _as_list(value, "scenario")
    scenarios = []
    for i, item in enumerate(items):
        path = f"scenario[{i}]" if isinstance(value, list) else "scenario"
        try:
            scenarios.append(get_scenario(str(item)))
        except ValueError as exc:
            raise StudyConfigError(path, str(exc)) from None
    return tuple(scenarios)


def _parse_plan(doc: Mapping) -> tuple[int, Dropout, float]:
    plan = _mapping(doc, "plan")
    unknown = set(plan) - {"k", "dropout", "p_exact"}
    if unknown:
        raise StudyConfigError(f"plan.{sorted(unknown)[0]}", "unknown field")
    k = _get_int(plan, "k", "plan.", DEFAULT_K, 1)
    raw_dropout = plan.get("dropout", DEFAULT_DROPOUT)
    dropout: Dropout
    if isinstance(raw_dropout, str):
        try:
            dropout_profile(raw_dropout, k)
        except ValueError as exc:
            raise StudyConfigError("plan.dropout", str(exc)) from None
        dropout = raw_dropout
    else:
        dropout = _float_list(raw_dropout, "plan.dropout")
        if len(dropout) != k:
            raise StudyConfigError("plan.dropout", f"expected {k} probabilities")
        for i, rate in enumerate(dropout):
            if not 0 <= rate <= 1:
                raise StudyConfigError(f"plan.dropout[{i}]", f"must lie in [0, 1], got {rate}")
    p_exact = _as_float(plan.get("p_exact", DEFAULT_P_EXACT), "plan.p_exact")
    if not 0 <= p_exact <= 1:
        raise StudyConfigError("plan.p_exact", f"must lie in [0, 1], got {p_exact}")
    return k, dropout, p_exact


def _parse_window(doc: Mapping) -> tuple[tuple[float, ...], float | None]:
    window = _mapping(doc, "window")
    tau0s = _float_list(window.get("tau0", [0.25, 0.5]), "window.tau0")
    for i, tau0 in enumerate(tau0s):
        if tau0 < 0:
            raise StudyConfigError(f"window.tau0[{i}]", f"must be non-negative, got {tau0}")
    raw_tau1 = window.get("tau1", STUDY_HORIZON)
    if raw_tau1 == "auto":
        return tau0s, None
    tau1 = _as_float(raw_tau1, "window.tau1")
    for i, tau0 in enumerate(tau0s):
        if tau0 >= tau1:
            raise StudyConfigError(f"window.tau0[{i}]", f"must lie below tau1={tau1:g}")
    return tau0s, tau1


def _parse_methods(doc: Mapping) -> tuple[str, ...]:
    methods = _as_list(doc.get("methods", list(ESTIMATION_METHODS)), "methods")
    for i, method in enumerate(methods):
        if method not in ESTIMATION_METHODS:
            raise StudyConfigError(
                f"methods[{i}]", f"unknown method {method!r}; expected one of {ESTIMATION_METHODS}"
            )
    return tuple(methods)


def _parse_tests(doc: Mapping) -> tuple[TestSpec, ...]:
    if "tests" not in doc:
        return ()
    tests = []
    for i, text in enumerate(_as_list(doc["tests"], "tests")):
        try:
            tests.append(parse_test_spec(text))
        except ValueError as exc:
            raise StudyConfigError(f"tests[{i}]", str(exc)) from None
    return tuple(tests)


def _parse_sweep(doc: Mapping) -> SweepSpec:
    sweep = _mapping(doc, "sweep")
    if not sweep:
        raise StudyConfigError("sweep", "required for sweep studies")
    family = sweep.get("family")
    if family not in FAMILIES:
        raise StudyConfigError("sweep.family", f"expected one of {FAMILIES}, got {family!r}")
    xs = _float_list(sweep.get("x"), "sweep.x")
    for i, x in enumerate(xs):
        if not 0 < x < 1:
            raise StudyConfigError(f"sweep.x[{i}]", f"must lie in (0, 1), got {x}")
    deltas = _float_list(sweep.get("delta"), "sweep.delta")
    for i, delta in enumerate(deltas):
        if delta < 0:
            raise StudyConfigError(f"sweep.delta[{i}]", f"must be non-negative, got {delta}")
    tau0s = _float_list(sweep.get("tau0"), "sweep.tau0")
    return SweepSpec(family, xs, tau0s, deltas)


def _parse_grid(doc: Mapping) -> tuple[tuple[str, tuple[Any, ...]], ...]:
    grid = _mapping(doc, "grid")
    parsed = []
    for factor, levels in grid.items():
        if factor not in GRID_FACTORS:
            raise StudyConfigError(f"grid.{factor}", f"unknown factor; expected {GRID_FACTORS}")
        values = _as_list(levels, f"grid.{factor}")
        for i, level in enumerate(values):
            path = f"grid.{factor}[{i}]"
            if factor == "scenario":
                try:
                    get_scenario(str(level))
                except ValueError as exc:
                    raise StudyConfigError(path, str(exc)) from None
            elif factor == "dropout":
                if not isinstance(level, str):
                    raise StudyConfigError(path, "expected a named dropout profile")
                try:
                    dropout_profile(level, 1)
                except ValueError as exc:
                    raise StudyConfigError(path, str(exc)) from None
            elif factor in ("n", "k"):
                if isinstance(level, bool) or not isinstance(level, int) or level < 1:
                    raise StudyConfigError(path, f"expected a positive integer, got {level!r}")
            else:
                value = _as_float(level, path)
                if not 0 <= value <= 1:
                    raise StudyConfigError(path, f"must lie in [0, 1], got {value}")
        parsed.append((factor, tuple(values)))
    return tuple(parsed)


def parse_study_config(doc: Any, overrides: Mapping[str, Any] | None = None) -> StudyConfig:
    if not isinstance(doc, dict):
        raise StudyConfigError("$", "a study file must hold a JSON object")
    doc = {**doc, **{key: value for key, value in (overrides or {}).items() if value is not None}}

    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise StudyConfigError(sorted(unknown)[0], "unknown field")
    if "schema" not in doc:
        raise StudyConfigError("schema", "required")
    if doc["schema"] != SCHEMA_VERSION:
        raise StudyConfigError("schema", f"unsupported version {doc['schema']!r}")
    kind = doc.get("kind")
    if kind not in STUDY_KINDS:
        raise StudyConfigError("kind", f"expected one of {STUDY_KINDS}, got {kind!r}")
    if kind != KIND_SWEEP and "scenario" not in doc:
        raise StudyConfigError("scenario", "required")

    k, dropout, p_exact = _parse_plan(doc)
    tau0s, tau1 = _parse_window(doc)
    tests = _parse_tests(doc)
    if kind == KIND_TEST and not tests:
        raise StudyConfigError("tests", "required for test studies")

    config = StudyConfig(
        name=str(doc.get("name", "study")),
        kind=kind,
        scenarios=_parse_scenarios(doc.get("scenario", DEFAULT_ESTIMATION_SCENARIO)),
        n=_get_int(doc, "n", "", DEFAULT_N, 2),
        k=k,
        dropout=dropout,
        p_exact=p_exact,
        tau0s=tau0s,
        tau1=tau1,
        replications=_get_int(doc, "replications", "", get_default_replications(), 1),
        seed=_get_int(doc, "seed", "", DEFAULT_SEED, 0),
        methods=_parse_methods(doc),
        tests=tests,
        sweep=_parse_sweep(doc) if kind == KIND_SWEEP else None,
        grid=_parse_grid(doc) if kind == KIND_ESTIMATION_GRID else (),
    )
    if any(factor == "k" for factor, _ in config.grid) and not isinstance(dropout, str):
        raise StudyConfigError("grid.k", K_NEEDS_PROFILE)
    return config


def load_study_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> StudyConfig:
    """Read a JSON study file; ``overrides`` (for example from CLI flags) win over the file."""
    try:
        with open(path, "r") as f:
            doc = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise StudyConfigError("$", f"not valid JSON: {exc}") from None
    return parse_study_config(doc, overrides)
