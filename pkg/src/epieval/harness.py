"""Synthetic epidemic curves and perturbed forecasters for end-to-end tests.

A season is a discretised logistic-growth/decay bump,
``peak_height * sech^2(r (t - peak_week) / 2)``, plus optional noise
truncated at zero. Forecasters are the truth passed through a
bias/shift/smoothing/noise perturbation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .curves import EpiCurve, ForecastRun, ForecastSet
from .exceptions import InvalidConfig, InvalidRange


@dataclass(frozen=True)
class SynthConfig:
    season_length: int = 52
    peak_week: int = 20
    peak_height: float = 5000.0
    onset_sharpness: float = 0.4
    noise_stdev: float = 0.0
    seed: int = 0
    decay_sharpness: float | None = None
    first_week: int = 1
    visits_per_week: float | None = None
    population: int | None = None
    region_id: str = "synthetic"
    season_id: str = "synthetic"

    def __post_init__(self):
        if not 1 < self.peak_week - self.first_week + 1 < self.season_length:
            raise InvalidConfig("peak_week must lie strictly inside the season")
        if not self.peak_height > 0:
            raise InvalidConfig("peak_height must be > 0")
        if self.noise_stdev < 0:
            raise InvalidConfig("noise_stdev must be >= 0")
        if not self.onset_sharpness > 0 or (self.decay_sharpness is not None and not self.decay_sharpness > 0):
            raise InvalidConfig("sharpness must be > 0")
        if self.visits_per_week is not None and not self.visits_per_week > 0:
            raise InvalidConfig("visits_per_week must be > 0")


@dataclass(frozen=True)
class PerturbConfig:
    method_id: str = "identity"
    amplitude_bias: float = 1.0
    phase_shift: float = 0.0
    smoothing_window: int = 1
    noise_stdev: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude_bias > 0:
            raise InvalidConfig("amplitude_bias must be > 0")
        if int(self.smoothing_window) != self.smoothing_window or self.smoothing_window < 1:
            raise InvalidConfig("smoothing_window must be an integer >= 1")
        if self.noise_stdev < 0:
            raise InvalidConfig("noise_stdev must be >= 0")

    @property
    def is_identity(self) -> bool:
        return (
            self.amplitude_bias == 1.0
            and self.phase_shift == 0
            and self.smoothing_window == 1
            and self.noise_stdev == 0
        )


def bump(cfg: SynthConfig) -> np.ndarray:
    t = np.arange(cfg.season_length, dtype=float) + cfg.first_week
    rate = np.where(t <= cfg.peak_week, cfg.onset_sharpness, cfg.decay_sharpness or cfg.onset_sharpness)
    return cfg.peak_height / np.cosh(rate * (t - cfg.peak_week) / 2.0) ** 2


def generate_curve(cfg: SynthConfig) -> EpiCurve:
    """Noiseless bump plus seeded Gaussian noise truncated at zero."""
    values = bump(cfg)
    if cfg.noise_stdev > 0:
        rng = np.random.default_rng(cfg.seed)
        values = np.maximum(values + rng.normal(0.0, cfg.noise_stdev, len(values)), 0.0)
    weeks = np.arange(cfg.first_week, cfg.first_week + cfg.season_length)
    visits = None if cfg.visits_per_week is None else np.full(len(values), float(cfg.visits_per_week))
    return EpiCurve(
        weeks=weeks,
        values=values,
        region_id=cfg.region_id,
        season_id=cfg.season_id,
        total_visits=visits,
        population=cfg.population,
    )


def perturb(truth: np.ndarray, cfg: PerturbConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Shift, smooth, scale and add noise to a whole truth curve."""
    y = np.asarray(truth, dtype=float)
    x = y
    if cfg.phase_shift:
        idx = np.arange(len(y), dtype=float)
        x = np.interp(idx - cfg.phase_shift, idx, y)
    if cfg.smoothing_window > 1:
        w = int(cfg.smoothing_window)
        padded = np.pad(x, (w // 2, w - 1 - w // 2), mode="edge")
        x = np.convolve(padded, np.ones(w) / w, mode="valid")
    x = cfg.amplitude_bias * x
    if cfg.noise_stdev > 0 and rng is not None:
        x = np.maximum(x + rng.normal(0.0, cfg.noise_stdev, len(x)), 0.0)
    return x


def generate_forecast_family(
    truth: EpiCurve,
    methods: Sequence[PerturbConfig],
    k_range: Iterable[int] | None = None,
    with_fitted: bool = False,
) -> list[ForecastSet]:
    """One :class:`ForecastSet` per perturbation, with a long-term run for every ``k``.

    Run ``k`` covers weeks ``k+1 .. T``. Noise is re-drawn per run from
    ``(seed, k)``. With ``with_fitted`` each run also carries the perturbed
    curve for weeks up to ``k``.
    """
    lo, hi = truth.first_week + 1, truth.last_week - 1
    ks = list(range(lo, hi + 1) if k_range is None else k_range)
    if not ks or min(ks) < lo or max(ks) > hi:
        raise InvalidRange(f"prediction times must lie within {lo}..{hi}")
    out = []
    for cfg in methods:
        runs = {}
        for k in ks:
            rng = np.random.default_rng([int(cfg.seed), int(k)]) if cfg.noise_stdev > 0 else None
            x = truth.values if cfg.is_identity else perturb(truth.values, cfg, rng)
            split = k - truth.first_week + 1
            runs[k] = ForecastRun(
                method_id=cfg.method_id,
                prediction_time=k,
                weeks=truth.weeks[split:],
                values=x[split:],
                fitted_weeks=truth.weeks[:split] if with_fitted else None,
                fitted_values=x[:split] if with_fitted else None,
            )
        out.append(ForecastSet(cfg.method_id, runs, truth, truth.region_id))
    return out


def graded_methods(n: int = 6, noise: float = 0.0, seed: int = 0) -> list[PerturbConfig]:
    """``n`` forecasters of increasing amplitude bias, the first one exact."""
    biases = np.linspace(1.0, 2.0, n)
    return [
        PerturbConfig(
            method_id=f"M{i + 1}",
            amplitude_bias=float(b),
            noise_stdev=0.0 if i == 0 else noise * i,
            seed=seed + i,
        )
        for i, b in enumerate(biases)
    ]
