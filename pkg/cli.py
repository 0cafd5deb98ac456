"""Command-line front end: ``estimate``, ``test``, ``simulate`` and ``bcos``.

Reports go to stdout as CSV; logs go to stderr. Exit codes are 0 on success, 1 for
usage, dataset or study-file errors and 2 for numerical failures.
"""

from __future__ import annotations

import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import click
import numpy as np
import pandas as pd

from bootstrap import bootstrap_se
from config import get_bootstrap_settings, get_float_format
from constants import (
    ESTIMATION_METHODS,
    METHOD_MIDPOINT_KM,
    TEST_LOGRANK,
    TEST_RMST,
    TEST_WMST,
    Z_975,
)
from curves import Observation
from datagen.calibration import CalibrationError
from datasets import DatasetError, load_bcos, read_dataset, split_arms, write_dataset
from estimators import EstimationError, fit_curve, impute_midpoint
from harness import run_study
from mean_survival import (
    DegenerateTestError,
    Window,
    select_tau1,
    wmst,
    wmst_diff_test,
    wmst_variance,
)
from rank_tests import fh_weight, logrank_weight, weighted_logrank
from reporting import (
    MANIFEST_FILENAME,
    RESULTS_FILENAME,
    curve_frame,
    write_manifest,
    write_results_csv,
)
from study_config import StudyConfigError, TestSpec, load_study_config, parse_test_spec

logger = logging.getLogger(__name__)

AUTO = "auto"
DEFAULT_TESTS = "rmst,wmst,logrank,fh:0:1"
BCOS_TAU0S = (0.0, 12.5, 15.0, 17.5)
BCOS_TESTS = "rmst,wmst,logrank,fh:0:1"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def _parse_tau0s(ctx, param, value: str) -> tuple[float, ...]:
    try:
        tau0s = tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated times, got {value!r}") from None
    if not tau0s or any(tau0 < 0 or not math.isfinite(tau0) for tau0 in tau0s):
        raise click.BadParameter(f"expected non-negative times, got {value!r}")
    return tau0s


def _parse_tau1(ctx, param, value: str) -> float | None:
    if value.strip().lower() == AUTO:
        return None
    try:
        tau1 = float(value)
    except ValueError:
        raise click.BadParameter(f"expected a time or 'auto', got {value!r}") from None
    if not math.isfinite(tau1) or tau1 <= 0:
        raise click.BadParameter(f"tau1 must be positive and finite, got {value!r}")
    return tau1


def _resolve_tau1(observations: Sequence[Observation], tau1: float | None) -> float:
    """Min-max rule on mid-point imputed times unless ``tau1`` is given."""
    arm0, arm1 = split_arms(observations)
    if arm0 and arm1:
        longest = select_tau1(impute_midpoint(arm0), impute_midpoint(arm1))
    else:
        longest = max(datum.time for datum in impute_midpoint(arm0 or arm1))
    if tau1 is None:
        return longest
    if tau1 > longest:
        logger.warning(
            "tau1=%s exceeds the largest observed time %s of an arm; "
            "the last curve value is carried forward",
            tau1,
            longest,
        )
    return tau1


def _window(tau0: float, tau1: float) -> Window:
    try:
        return Window(tau0, tau1)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--tau0/--tau1") from None


def _arm_estimate(
    data: Sequence[Observation], method: str, window: Window, rng: np.random.Generator
) -> tuple[float, float, str]:
    curve, table = fit_curve(data, method)
    value = wmst(curve, window)
    if table is not None:
        return value, math.sqrt(wmst_variance(curve, table, window)), "greenwood"
    replicates, _ = get_bootstrap_settings()
    estimate = bootstrap_se(data, method, window, replicates, rng)
    return value, estimate.std_error, f"bootstrap({estimate.replicates})"


def estimate_report(
    observations: Sequence[Observation],
    method: str,
    tau0s: Sequence[float],
    tau1: float | None,
    seed: int,
) -> pd.DataFrame:
    """Per-arm window means with SEs, plus arm 1 − arm 0 when both arms are present."""
    resolved_tau1 = _resolve_tau1(observations, tau1)
    arms = [(arm, data) for arm, data in enumerate(split_arms(observations)) if data]
    rng = np.random.default_rng(seed)
    rows = []
    for tau0 in tau0s:
        window = _window(tau0, resolved_tau1)
        by_arm = {}
        for arm, data in arms:
            value, std_error, source = _arm_estimate(data, method, window, rng)
            by_arm[arm] = (value, std_error)
            rows.append((f"arm{arm}", tau0, resolved_tau1, value, std_error, source))
        if len(by_arm) == 2:
            difference = by_arm[1][0] - by_arm[0][0]
            std_error = math.sqrt(by_arm[0][1] ** 2 + by_arm[1][1] ** 2)
            rows.append(("arm1-arm0", tau0, resolved_tau1, difference, std_error, source))

    frame = pd.DataFrame(
        rows, columns=["quantity", "tau0", "tau1", "estimate", "std_error", "se_method"]
    )
    frame["ci_low"] = frame.estimate - Z_975 * frame.std_error
    frame["ci_high"] = frame.estimate + Z_975 * frame.std_error
    return frame


def _expand_tests(text: str, tau0s: Sequence[float]) -> list[TestSpec]:
    specs = []
    for token in (part.strip() for part in text.split(",")):
        if not token:
            continue
        if token.lower() == TEST_WMST:
            specs.extend(TestSpec(TEST_WMST, tau0=tau0) for tau0 in tau0s)
            continue
        try:
            specs.append(parse_test_spec(token))
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--tests") from None
    if not specs:
        raise click.BadParameter("no tests selected", param_hint="--tests")
    return specs


def test_report(
    observations: Sequence[Observation],
    tests: Sequence[TestSpec],
    tau1: float | None,
) -> pd.DataFrame:
    """Z, two-sided p and (for RMST/WMST) the difference with its 95% CI, per test."""
    arm0, arm1 = split_arms(observations)
    if not arm0 or not arm1:
        raise click.UsageError("two-sample tests need observations in both arms 0 and 1")
    resolved_tau1 = _resolve_tau1(observations, tau1)
    points0, points1 = impute_midpoint(arm0), impute_midpoint(arm1)

    rows = []
    for spec in tests:
        if spec.is_mean_survival:
            tau0 = 0.0 if spec.kind == TEST_RMST else spec.tau0
            result = wmst_diff_test(points0, points1, _window(tau0, resolved_tau1))
            assert result.effect is not None
            effect = result.effect
            rows.append(
                (spec.label, tau0, resolved_tau1, result.statistic, result.p_value,
                 effect.estimate, effect.ci_low, effect.ci_high)
            )
            continue
        weight = logrank_weight() if spec.kind == TEST_LOGRANK else fh_weight(spec.p, spec.q)
        result = weighted_logrank(points0, points1, weight)
        rows.append(
            (spec.label, math.nan, math.nan, result.statistic, result.p_value,
             math.nan, math.nan, math.nan)
        )
    return pd.DataFrame(
        rows,
        columns=["test", "tau0", "tau1", "statistic", "p_value", "estimate", "ci_low", "ci_high"],
    )


def _echo_frame(frame: pd.DataFrame) -> None:
    report = frame.to_csv(index=False, float_format=get_float_format(), lineterminator="\n")
    click.echo(report, nl=False)


def _load(path: str) -> list[Observation]:
    observations = read_dataset(path)
    logger.info("Read %s observations from %s", len(observations), path)
    return observations


@click.group()
def cli() -> None:
    """Window and restricted mean survival analysis for interval-censored data."""


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(ESTIMATION_METHODS), default=METHOD_MIDPOINT_KM)
@click.option("--tau0", "tau0s", default="0", callback=_parse_tau0s, help="Comma-separated.")
@click.option("--tau1", default=AUTO, callback=_parse_tau1, help="A time or 'auto'.")
@click.option("--seed", type=int, default=None, help="Bootstrap seed for Turnbull SEs.")
@click.option("--curve-csv", type=click.Path(dir_okay=False), default=None)
def estimate(dataset, method, tau0s, tau1, seed, curve_csv) -> None:
    """Per-arm WMST/RMST estimates of DATASET."""
    observations = _load(dataset)
    _, default_seed = get_bootstrap_settings()
    seed = default_seed if seed is None else seed
    _echo_frame(estimate_report(observations, method, tau0s, tau1, seed))
    if curve_csv:
        _write_curves(observations, method, curve_csv)


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--tests", "tests_text", default=DEFAULT_TESTS, help="rmst,wmst,logrank,fh:p:q")
@click.option("--tau0", "tau0s", default="0", callback=_parse_tau0s, help="Comma-separated.")
@click.option("--tau1", default=AUTO, callback=_parse_tau1, help="A time or 'auto'.")
def test(dataset, tests_text, tau0s, tau1) -> None:
    """Two-sample tests on DATASET (mid-point imputation)."""
    observations = _load(dataset)
    _echo_frame(test_report(observations, _expand_tests(tests_text, tau0s), tau1))


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--replications", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker process cap.")
def simulate(config_path, replications, seed, out_dir, workers) -> None:
    """Run the Monte Carlo study described by CONFIG_PATH."""
    if workers is not None:
        os.environ["WMST_MAX_WORKERS"] = str(workers)
    config = load_study_config(config_path, {"replications": replications, "seed": seed})
    summary = run_study(config)
    out = Path(out_dir)
    results_path = write_results_csv(summary, out / RESULTS_FILENAME)
    write_manifest(summary, config, out / MANIFEST_FILENAME)
    click.echo(str(results_path))


@cli.command()
@click.option("--method", type=click.Choice(ESTIMATION_METHODS), default=METHOD_MIDPOINT_KM)
@click.option("--seed", type=int, default=None, help="Bootstrap seed for Turnbull SEs.")
@click.option("--export", type=click.Path(dir_okay=False), default=None)
@click.option("--curve-csv", type=click.Path(dir_okay=False), default=None)
def bcos(method, seed, export, curve_csv) -> None:
    """Breast cosmesis application: arm estimates and the full test battery."""
    observations = load_bcos()
    _, default_seed = get_bootstrap_settings()
    tau0s = BCOS_TAU0S
    seed = default_seed if seed is None else seed
    _echo_frame(estimate_report(observations, method, tau0s, None, seed))
    click.echo()
    _echo_frame(test_report(observations, _expand_tests(BCOS_TESTS, tau0s[1:]), None))
    if export:
        write_dataset(observations, export)
    if curve_csv:
        _write_curves(observations, method, curve_csv)


def _write_curves(observations: Sequence[Observation], method: str, path: str) -> None:
    frames = [
        curve_frame(fit_curve(data, method)[0], arm)
        for arm, data in enumerate(split_arms(observations))
        if data
    ]
    pd.concat(frames, ignore_index=True).to_csv(
        path, index=False, float_format=get_float_format(), lineterminator="\n"
    )


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "WARNING").upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        result = cli.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (DatasetError, StudyConfigError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_USAGE
    except (EstimationError, DegenerateTestError, CalibrationError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_NUMERICAL
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
