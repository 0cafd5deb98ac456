"""Event-time laws: Weibull and piecewise-linear hazards.

Every law exposes its cumulative hazard H and its inverse, so one sampler covers both:
draw E ~ Exp(1) and return H⁻¹(E).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad

# Absolute tolerance for numerically integrated true mean survival times
TRUE_MEAN_ABS_TOL = 1e-9


@dataclass(frozen=True)
class WeibullLaw:
    scale: float
    shape: float

    def __post_init__(self) -> None:
        if self.scale <= 0 or self.shape <= 0:
            raise ValueError(f"Weibull parameters must be positive: {self}")

    @property
    def label(self) -> str:
        return f"Weibull({self.scale:g},{self.shape:g})"

    def cumulative_hazard(self, t):
        return np.power(np.asarray(t, dtype=float) / self.scale, self.shape)

    def inverse_cumulative_hazard(self, e):
        return self.scale * np.power(np.asarray(e, dtype=float), 1.0 / self.shape)

    def survival(self, t):
        return np.exp(-self.cumulative_hazard(t))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class HazardPiece:
    """Hazard rising or falling linearly from ``h_start`` to ``h_end`` on [t_start, t_end)."""

    t_start: float
    t_end: float
    h_start: float
    h_end: float

    @property
    def slope(self) -> float:
        return (self.h_end - self.h_start) / (self.t_end - self.t_start)

    @property
    def mass(self) -> float:
        return 0.5 * (self.h_start + self.h_end) * (self.t_end - self.t_start)


@dataclass(frozen=True)
class PiecewiseLinearHazardLaw:
    pieces: tuple[HazardPiece, ...]

    def __post_init__(self) -> None:
        if not self.pieces:
            raise ValueError("a piecewise hazard needs at least one piece")
        if self.pieces[0].t_start != 0:
            raise ValueError("hazard pieces must start at 0")
        previous_end = 0.0
        for piece in self.pieces:
            if piece.t_start != previous_end or not piece.t_end > piece.t_start:
                raise ValueError(f"hazard pieces must tile the time axis: {piece}")
            if piece.h_start < 0 or piece.h_end < 0:
                raise ValueError(f"hazard values must be non-negative: {piece}")
            previous_end = piece.t_end

    @classmethod
    def from_pieces(
        cls, *pieces: tuple[float, float, float, float]
    ) -> PiecewiseLinearHazardLaw:
        return cls(tuple(HazardPiece(*map(float, piece)) for piece in pieces))

    @property
    def label(self) -> str:
        return "PiecewiseLinearHazard(" + "; ".join(
            f"[{p.t_start:g},{p.t_end:g}): {p.h_start:g}->{p.h_end:g}" for p in self.pieces
        ) + ")"

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(piece.t_end for piece in self.pieces)

    @property
    def _cumulative_at_starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([piece.mass for piece in self.pieces])])

    def cumulative_hazard(self, t):
        t = np.asarray(t, dtype=float)
        result = np.zeros_like(t)
        for piece, base in zip(self.pieces, self._cumulative_at_starts):
            u = np.clip(t - piece.t_start, 0.0, piece.t_end - piece.t_start)
            inside = (t > piece.t_start) & (t <= piece.t_end)
            within = base + piece.h_start * u + 0.5 * piece.slope * u * u
            result = np.where(inside, within, result)
        last = self.pieces[-1]
        beyond = self._cumulative_at_starts[-1] + last.h_end * (t - last.t_end)
        return np.where(t > last.t_end, beyond, result)

    def inverse_cumulative_hazard(self, e):
        e = np.asarray(e, dtype=float)
        cumulative = self._cumulative_at_starts
        result = np.full(e.shape, np.inf)
        for piece, lower, upper in zip(self.pieces, cumulative[:-1], cumulative[1:]):
            inside = (e >= lower) & (e < upper)
            if not inside.any():
                continue
            c = e[inside] - lower
            # Root of slope/2·u² + h_start·u − c = 0, written to stay stable when slope → 0
            root = np.sqrt(piece.h_start**2 + 2.0 * piece.slope * c)
            with np.errstate(invalid="ignore", divide="ignore"):
                offset = np.where(c > 0, 2.0 * c / (piece.h_start + root), 0.0)
            result[inside] = piece.t_start + offset
        beyond = e >= cumulative[-1]
        last = self.pieces[-1]
        if beyond.any() and last.h_end > 0:
            result[beyond] = last.t_end + (e[beyond] - cumulative[-1]) / last.h_end
        return result

    def survival(self, t):
        return np.exp(-self.cumulative_hazard(t))


ArmLaw = Union[WeibullLaw, PiecewiseLinearHazardLaw]


def sample_event_time(rng: np.random.Generator, law: ArmLaw) -> float:
    return float(law.inverse_cumulative_hazard(rng.standard_exponential()))


def sample_event_times(rng: np.random.Generator, law: ArmLaw, size: int) -> np.ndarray:
    return np.asarray(law.inverse_cumulative_hazard(rng.standard_exponential(size)), dtype=float)


def true_mean_survival(law: ArmLaw, tau0: float, tau1: float) -> float:
    """∫_{τ0}^{τ1} exp(−H(t)) dt; closed form for exponential laws."""
    if tau1 < tau0:
        raise ValueError(f"window out of order: [{tau0}, {tau1}]")
    if tau1 == tau0:
        return 0.0
    if isinstance(law, WeibullLaw) and law.shape == 1:
        return law.scale * (math.exp(-tau0 / law.scale) - math.exp(-tau1 / law.scale))
    points = [point for point in law.breakpoints if tau0 < point < tau1]
    value, _ = quad(
        lambda t: float(law.survival(t)),
        tau0,
        tau1,
        points=points or None,
        epsabs=TRUE_MEAN_ABS_TOL,
        limit=200,
    )
    return float(value)
