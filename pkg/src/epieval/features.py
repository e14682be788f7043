"""Epidemiologically relevant features of a weekly case-count curve.

Functions accept either an :class:`~epieval.curves.EpiCurve` or a plain
sequence of counts (taken to start at week 1, or at ``first_week``).
Every week-valued output is a week number, never an offset.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .curves import EpiCurve
from .exceptions import (
    DegeneratePeakAtStart,
    EmptySeries,
    FeatureError,
    MissingDenominator,
    MissingGroupPopulation,
    NoNonInfluenzaWeeks,
    SeriesTooShort,
    ZeroContacts,
    ZeroPopulation,
)

TAKEOFF_DELTA_T = 2
TAKEOFF_THRESHOLD = 150.0
NON_INFLUENZA_FRACTION = 0.02

#: Features ranked by the evaluation pipeline, in report order.
FEATURE_IDS = (
    "peak_value",
    "peak_time",
    "takeoff_value",
    "takeoff_time",
    "id_length",
    "id_start",
    "season_start",
    "speed",
)


def _series(curve, first_week=None) -> tuple[np.ndarray, int]:
    if isinstance(curve, EpiCurve):
        return curve.values, curve.first_week if first_week is None else first_week
    values = np.asarray(curve, dtype=float)
    if values.ndim != 1:
        raise EmptySeries("expected a 1-d series")
    return values, 1 if first_week is None else int(first_week)


@dataclass(frozen=True)
class FeatureConfig:
    """Thresholds used by :func:`extract_all`.

    ``id_threshold`` has no sensible default and must be chosen per
    disease and region. ``season_threshold`` is a flu percentage; leave it
    as ``None`` to skip the season-start feature.
    """

    id_threshold: float
    takeoff_delta_t: int = TAKEOFF_DELTA_T
    takeoff_threshold: float = TAKEOFF_THRESHOLD
    season_threshold: float | None = None

    def __post_init__(self):
        if int(self.takeoff_delta_t) != self.takeoff_delta_t or self.takeoff_delta_t < 1:
            raise ValueError("takeoff_delta_t must be an integer >= 1")
        if not self.takeoff_threshold > 0 or not self.id_threshold > 0:
            raise ValueError("thresholds must be > 0")
        if self.season_threshold is not None and not self.season_threshold > 0:
            raise ValueError("season_threshold must be > 0")

    def scaled(self, factor: float) -> "FeatureConfig":
        """Thresholds on counts multiplied by ``factor``; percentages untouched."""
        return FeatureConfig(
            id_threshold=self.id_threshold * factor,
            takeoff_delta_t=self.takeoff_delta_t,
            takeoff_threshold=self.takeoff_threshold * factor,
            season_threshold=self.season_threshold,
        )


@dataclass(frozen=True)
class FeatureVector:
    peak_value: float
    peak_week: int
    takeoff_value: float | None = None
    takeoff_week: int | None = None
    id_length: int | None = None
    id_start: int | None = None
    id_longest_run: int | None = None
    id_end: int | None = None
    speed: float | None = None
    season_start: int | None = None
    tar: float | None = None
    diagnostics: Mapping[str, str] = field(default_factory=dict)

    def get(self, feature_id: str):
        """Value of a ranked feature by its id (see :data:`FEATURE_IDS`)."""
        attr = {
            "peak_value": "peak_value",
            "peak_time": "peak_week",
            "takeoff_value": "takeoff_value",
            "takeoff_time": "takeoff_week",
            "id_length": "id_length",
            "id_start": "id_start",
            "season_start": "season_start",
            "speed": "speed",
            "tar": "tar",
        }.get(feature_id)
        if attr is None:
            raise KeyError(f"unknown feature {feature_id!r}")
        return getattr(self, attr)

    def occurrence_week(self, feature_id: str) -> int | None:
        """Week by which the feature has been realised in the data.

        Forecasts issued at or after this week are no longer predicting it.
        """
        if feature_id in ("peak_value", "peak_time", "speed"):
            return self.peak_week
        if feature_id in ("takeoff_value", "takeoff_time"):
            return self.takeoff_week
        if feature_id == "id_start":
            return self.id_start
        if feature_id == "id_length":
            return self.id_end
        if feature_id == "season_start":
            return self.season_start
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = dict(self.diagnostics)
        return d


def peak(curve, first_week=None) -> tuple[float, int]:
    """Highest weekly count and the earliest week attaining it."""
    values, start = _series(curve, first_week)
    if len(values) == 0:
        raise EmptySeries("peak of an empty series")
    i = int(np.argmax(values))
    return float(values[i]), start + i


def first_take_off(curve, cfg: FeatureConfig | None = None, *, delta_t=None, threshold=None, first_week=None):
    """Earliest week whose ``delta_t``-week slope reaches the threshold.

    Returns ``(slope, week)`` or ``None`` if the slope never reaches it.
    """
    values, start = _series(curve, first_week)
    dt = int(delta_t if delta_t is not None else (cfg.takeoff_delta_t if cfg else TAKEOFF_DELTA_T))
    thr = float(threshold if threshold is not None else (cfg.takeoff_threshold if cfg else TAKEOFF_THRESHOLD))
    if len(values) <= dt:
        raise SeriesTooShort(f"take-off with delta_t={dt} needs more than {dt} weeks, got {len(values)}")
    slopes = (values[dt:] - values[:-dt]) / dt
    hits = np.flatnonzero(slopes >= thr)
    if len(hits) == 0:
        return None
    i = int(hits[0])
    return float(slopes[i]), start + i


@dataclass(frozen=True)
class IntensityDuration:
    length: int
    start: int
    longest_run: int
    end: int


def intensity_duration(curve, threshold: float, first_week=None) -> IntensityDuration | None:
    """Weeks with counts strictly above ``threshold``.

    ``length`` counts all such weeks, ``start``/``end`` are the first and
    last of them and ``longest_run`` is the longest consecutive stretch.
    """
    if not threshold > 0:
        raise ValueError("intensity threshold must be > 0")
    values, start = _series(curve, first_week)
    if len(values) == 0:
        raise EmptySeries("intensity duration of an empty series")
    above = values > threshold
    idx = np.flatnonzero(above)
    if len(idx) == 0:
        return None
    longest = run = 0
    for flag in above:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    return IntensityDuration(int(len(idx)), start + int(idx[0]), longest, start + int(idx[-1]))


def speed_of_epidemic(curve, start_week: int | None = None, first_week=None) -> float:
    """Slope of the line from the start point to the peak (cases/week per week).

    ``start_week`` defaults to the first week of the series.
    """
    values, start = _series(curve, first_week)
    x_peak, t_peak = peak(values, start)
    t_start = start if start_week is None else int(start_week)
    if not start <= t_start < start + len(values):
        raise ValueError(f"start week {t_start} outside the series")
    if t_peak == t_start:
        raise DegeneratePeakAtStart(f"peak and start coincide at week {t_start}")
    x_start = float(values[t_start - start])
    return (x_peak - x_start) / (t_peak - t_start)


def total_attack_rate(n_total_infected: float, n_population_start: float) -> float:
    if not n_population_start > 0:
        raise ZeroPopulation("population at start must be > 0")
    if n_total_infected < 0:
        raise ValueError("infected count must be >= 0")
    return n_total_infected / n_population_start


def age_attack_rate(counts_by_group: Mapping[str, float], pop_by_group: Mapping[str, float]) -> dict[str, float]:
    """Attack rate per sub-population (age band, sex, any grouping)."""
    out = {}
    for group, count in counts_by_group.items():
        if group not in pop_by_group:
            raise MissingGroupPopulation(f"no population for group {group!r}")
        out[group] = total_attack_rate(count, pop_by_group[group])
    return out


def secondary_attack_rate(n_second_generation: float, n_contacts: float) -> float:
    if not n_contacts > 0:
        raise ZeroContacts("number of contacts must be > 0")
    return n_second_generation / n_contacts


def flu_percentage(curve: EpiCurve) -> np.ndarray:
    """Weekly ILI counts as a percentage of total visits."""
    visits = getattr(curve, "total_visits", None)
    if visits is None:
        raise MissingDenominator("curve has no total_visits")
    if np.any(~(visits > 0)):
        raise MissingDenominator("total_visits must be > 0")
    return 100.0 * curve.values / visits


def non_influenza_weeks(counts: Sequence[float], fraction: float = NON_INFLUENZA_FRACTION) -> np.ndarray:
    """Mask of weeks in runs of two or more weeks below ``fraction`` of the season total."""
    counts = np.asarray(counts, dtype=float)
    low = counts < fraction * counts.sum()
    mask = np.zeros_like(low)
    i = 0
    while i < len(low):
        if not low[i]:
            i += 1
            continue
        j = i
        while j < len(low) and low[j]:
            j += 1
        if j - i >= 2:
            mask[i:j] = True
        i = j
    return mask


def season_baseline(past_seasons, fraction: float = NON_INFLUENZA_FRACTION) -> float:
    """Season-start threshold from past seasons (percent).

    Each past season is an :class:`EpiCurve` with ``total_visits`` or a
    ``(counts, percentages)`` pair. Percentages of non-influenza weeks are
    pooled over all seasons; the baseline is their mean plus two sample
    standard deviations.
    """
    pooled = []
    seasons = list(past_seasons)
    if not seasons:
        raise NoNonInfluenzaWeeks("no past seasons given")
    for season in seasons:
        if isinstance(season, EpiCurve):
            counts, pct = season.values, flu_percentage(season)
        else:
            counts, pct = (np.asarray(a, dtype=float) for a in season)
            if counts.shape != pct.shape:
                raise ValueError("counts and percentages must have equal length")
        pooled.extend(pct[non_influenza_weeks(counts, fraction)])
    if not pooled:
        raise NoNonInfluenzaWeeks("no run of two or more low weeks in any past season")
    pooled = np.asarray(pooled)
    return float(pooled.mean() + 2.0 * pooled.std(ddof=1))


def season_start(percent_series, threshold: float, first_week=None) -> int | None:
    """Earliest week whose flu percentage exceeds ``threshold``."""
    if not threshold > 0:
        raise ValueError("season threshold must be > 0")
    values, start = _series(percent_series, first_week)
    hits = np.flatnonzero(values > threshold)
    return None if len(hits) == 0 else start + int(hits[0])


def extract_all(curve: EpiCurve, cfg: FeatureConfig) -> FeatureVector:
    """Every feature computable from ``curve``.

    Failures of individual features never abort the vector; the field is
    left ``None`` and the reason is stored in ``diagnostics``.
    """
    diag: dict[str, str] = {}
    x_peak, t_peak = peak(curve)
    fields: dict = {"peak_value": x_peak, "peak_week": t_peak}

    try:
        takeoff = first_take_off(curve, cfg)
    except FeatureError as exc:
        takeoff, diag["takeoff"] = None, f"{type(exc).__name__}: {exc}"
    else:
        if takeoff is None:
            diag["takeoff"] = "slope never reaches the take-off threshold"
    if takeoff is not None:
        fields["takeoff_value"], fields["takeoff_week"] = takeoff

    idur = intensity_duration(curve, cfg.id_threshold)
    if idur is None:
        diag["intensity_duration"] = "no week above the intensity threshold"
    else:
        fields.update(id_length=idur.length, id_start=idur.start, id_longest_run=idur.longest_run, id_end=idur.end)

    try:
        fields["speed"] = speed_of_epidemic(curve)
    except FeatureError as exc:
        diag["speed"] = f"{type(exc).__name__}: {exc}"

    if curve.total_visits is None:
        diag["season_start"] = "no total_visits"
    elif cfg.season_threshold is None:
        diag["season_start"] = "no season threshold configured"
    else:
        start = season_start(flu_percentage(curve), cfg.season_threshold, curve.first_week)
        if start is None:
            diag["season_start"] = "flu percentage never exceeds the threshold"
        fields["season_start"] = start

    if curve.population is None:
        diag["tar"] = "no population"
    else:
        fields["tar"] = total_attack_rate(float(curve.values.sum()), curve.population)

    return FeatureVector(**fields, diagnostics=diag)
