"""Dataset files: CSV with header ``arm,left,right``.

``left == right`` is an exact event, an empty ``right`` is a right-censoring at ``left``
and ``left < right`` is an event inside (left, right]. An empty ``left`` reads as 0.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import pandas as pd

from curves import Observation, ObservationKind

COLUMNS = ["arm", "left", "right"]
BCOS_PATH = Path(__file__).with_name("data") / "bcos.csv"
BCOS_ARMS = {0: "RadChem", 1: "Rad"}

# Spellings accepted for a missing right endpoint besides the empty field
_OPEN_RIGHT = {"", "inf", "+inf", "na"}


class DatasetError(ValueError):
    """Raised when a dataset file cannot be parsed; the message carries the file line."""


def _parse_time(raw: str, line: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(f"line {line}: {column} is not a number: {raw!r}") from None
    if not math.isfinite(value) or value < 0:
        raise DatasetError(f"line {line}: {column} must be finite and non-negative: {raw!r}")
    return value


def _parse_row(arm_raw: str, left_raw: str, right_raw: str, line: int) -> Observation:
    if arm_raw not in ("0", "1"):
        raise DatasetError(f"line {line}: arm must be 0 or 1, got {arm_raw!r}")
    arm = int(arm_raw)
    if right_raw.lower() in _OPEN_RIGHT:
        if not left_raw:
            raise DatasetError(f"line {line}: left and right are both empty")
        return Observation.right_censored(_parse_time(left_raw, line, "left"), arm)

    left = _parse_time(left_raw, line, "left") if left_raw else 0.0
    right = _parse_time(right_raw, line, "right")
    if left == right:
        if left == 0:
            raise DatasetError(f"line {line}: event time must be positive, got 0")
        return Observation.exact(left, arm)
    if left > right:
        raise DatasetError(f"line {line}: left {left:g} exceeds right {right:g}")
    return Observation.interval(left, right, arm)


def read_dataset(path: str | Path) -> list[Observation]:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DatasetError("line 1: file is empty") from None
    except pd.errors.ParserError as exc:
        raise DatasetError(f"malformed CSV: {exc}") from None

    header = [str(column).strip().lower() for column in frame.columns]
    if header != COLUMNS:
        raise DatasetError(f"line 1: expected header {','.join(COLUMNS)}, got {','.join(header)}")
    if frame.empty:
        raise DatasetError("line 2: no observations")

    observations = []
    for offset, row in enumerate(frame.itertuples(index=False, name=None)):
        arm, left, right = ("" if pd.isna(value) else str(value).strip() for value in row)
        observations.append(_parse_row(arm, left, right, offset + 2))
    return observations


def write_dataset(observations: Sequence[Observation], path: str | Path) -> Path:
    rows = []
    for observation in observations:
        if observation.kind is ObservationKind.RIGHT_CENSORED:
            right = ""
        else:
            right = repr(observation.right)
        rows.append((observation.arm, repr(observation.left), right))
    path = Path(path)
    pd.DataFrame(rows, columns=COLUMNS).to_csv(path, index=False, lineterminator="\n")
    return path


def split_arms(observations: Sequence[Observation]) -> tuple[list[Observation], list[Observation]]:
    arm0 = [observation for observation in observations if observation.arm == 0]
    arm1 = [observation for observation in observations if observation.arm == 1]
    return arm0, arm1


def load_bcos() -> list[Observation]:
    """Breast cosmesis data: arm 0 radiotherapy plus chemotherapy, arm 1 radiotherapy alone.

    Months to cosmetic deterioration, interval-censored between clinic visits.
    """
    return read_dataset(BCOS_PATH)
