"""Results CSV and JSON run manifests for Monte Carlo studies."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import pandas as pd

from config import get_float_format
from curves import STEP, SurvivalCurve
from harness import MetricsSummary, Row
from study_config import StudyConfig

logger = logging.getLogger(__name__)

RESULTS_FILENAME = "results.csv"
MANIFEST_FILENAME = "manifest.json"


def results_frame(rows: Sequence[Row]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows])


def write_results_csv(summary: MetricsSummary, path: str | Path) -> Path:
    """One row per method or test (and per sweep cell); floats use the configured format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    results_frame(summary.rows).to_csv(
        path, index=False, float_format=get_float_format(), lineterminator="\n"
    )
    logger.info("Wrote %s result rows to %s", len(summary.rows), path)
    return path


def _config_echo(config: StudyConfig) -> dict[str, Any]:
    return {
        "name": config.name,
        "kind": config.kind,
        "scenarios": [scenario.label for scenario in config.scenarios],
        "n": config.n,
        "plan": {
            "k": config.k,
            "dropout": config.dropout if isinstance(config.dropout, str) else list(config.dropout),
            "p_exact": config.p_exact,
        },
        "window": {"tau0": list(config.tau0s), "tau1": config.tau1 or "auto"},
        "replications": config.replications,
        "seed": config.seed,
        "methods": list(config.methods),
        "tests": [spec.label for spec in config.tests],
        "sweep": asdict(config.sweep) if config.sweep is not None else None,
        "grid": {factor: list(levels) for factor, levels in config.grid},
    }


def write_manifest(summary: MetricsSummary, config: StudyConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "study": summary.study,
        "kind": summary.kind,
        "config": _config_echo(config),
        "seed": config.seed,
        "replications": summary.replications,
        "failures": summary.failures,
        "wall_time_seconds": round(summary.wall_time, 3),
        "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def curve_frame(curve: SurvivalCurve, arm: int) -> pd.DataFrame:
    """Plot-ready knots: value at each segment start, then the value after the last knot.

    ``shape`` tells a plotter whether to hold the value (step) or draw a line to the
    next row (linear).
    """
    rows = [
        (arm, segment.start, segment.start_value, segment.shape) for segment in curve.segments
    ]
    rows.append((arm, curve.domain_end, curve.final_value, STEP))
    return pd.DataFrame(rows, columns=["arm", "time", "survival", "shape"])
