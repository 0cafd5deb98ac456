"""Nonparametric bootstrap standard errors for window mean survival estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from curves import Observation
from estimators import EstimationError, fit_curve
from mean_survival import Window, wmst

logger = logging.getLogger(__name__)

MIN_REPLICATES = 100


@dataclass(frozen=True)
class BootstrapEstimate:
    std_error: float
    replicates: int
    skipped: int


def bootstrap_se(
    data: Sequence[Observation],
    method: str,
    window: Window,
    replicates: int,
    rng: np.random.Generator,
) -> BootstrapEstimate:
    """Resample subjects with replacement and refit ``method`` on each resample.

    Resamples whose fit fails are skipped and counted; at least ``MIN_REPLICATES`` must
    succeed.
    """
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} bootstrap replicates: {replicates}")
    if not data:
        raise EstimationError("bootstrap needs at least one observation")

    n = len(data)
    values = []
    skipped = 0
    for _ in range(replicates):
        indices = rng.integers(0, n, size=n)
        sample = [data[i] for i in indices]
        try:
            curve, _ = fit_curve(sample, method)
        except EstimationError:
            skipped += 1
            continue
        values.append(wmst(curve, window))

    if skipped:
        logger.warning("Skipped %s of %s bootstrap resamples with failed fits", skipped, replicates)
    if len(values) < MIN_REPLICATES:
        raise EstimationError(
            f"only {len(values)} bootstrap resamples could be fitted; need {MIN_REPLICATES}"
        )
    return BootstrapEstimate(
        std_error=float(np.std(values, ddof=1)), replicates=len(values), skipped=skipped
    )
