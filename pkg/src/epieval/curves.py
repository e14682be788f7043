"""Observed curves, forecast runs and stochastic predictions.

Every object here is immutable once built: arrays are copied and flagged
read-only so they can be shared between evaluation threads.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    EmptyOverlap,
    InvalidForecast,
    InvalidSpec,
    MissingDenominator,
    NegativeCount,
    NonContiguousWeeks,
    TooShort,
)

logger = logging.getLogger(__name__)

LARGE_SAMPLE = 30


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Mode(str, Enum):
    FORECASTING = "forecasting"
    CALIBRATION = "calibration"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True, eq=False)
class EpiCurve:
    """One season of weekly new-case counts for one region.

    Weeks are 1-based and contiguous. ``total_visits`` (patients/week) is
    needed for flu percentages, ``population`` for the attack rate.
    """

    weeks: np.ndarray
    values: np.ndarray
    region_id: str = ""
    season_id: str = ""
    total_visits: np.ndarray | None = None
    population: int | None = None

    def __post_init__(self):
        weeks = _frozen(self.weeks, dtype=np.int64)
        values = _frozen(self.values)
        if weeks.ndim != 1 or weeks.shape != values.shape:
            raise InvalidForecast("weeks and values must be 1-d and of equal length")
        if len(weeks) > 1 and np.any(np.diff(weeks) != 1):
            raise NonContiguousWeeks("weeks must be strictly increasing and contiguous")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise NegativeCount("counts must be finite and non-negative")
        if len(weeks) < 2:
            raise TooShort(f"a curve needs at least 2 weeks, got {len(weeks)}")
        object.__setattr__(self, "weeks", weeks)
        object.__setattr__(self, "values", values)
        if self.total_visits is not None:
            visits = _frozen(self.total_visits)
            if visits.shape != values.shape:
                raise InvalidForecast("total_visits must match the length of values")
            if np.any(~(visits > 0)):
                raise MissingDenominator("every total_visits entry must be > 0")
            object.__setattr__(self, "total_visits", visits)
        if self.population is not None and not self.population > 0:
            raise InvalidForecast("population must be a positive integer")

    @property
    def T(self) -> int:
        return len(self.values)

    @property
    def first_week(self) -> int:
        return int(self.weeks[0])

    @property
    def last_week(self) -> int:
        return int(self.weeks[-1])

    def value_at(self, week: int) -> float:
        return float(self.values[week - self.first_week])

    def window(self, start: int, stop: int) -> np.ndarray:
        """Counts for weeks ``start..stop`` inclusive, clipped to the curve."""
        lo = max(start, self.first_week) - self.first_week
        hi = min(stop, self.last_week) - self.first_week + 1
        return self.values[lo:max(lo, hi)]

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(w), float(v)) for w, v in zip(self.weeks, self.values)]

    def __eq__(self, other):
        if not isinstance(other, EpiCurve):
            return NotImplemented
        return (
            self.region_id == other.region_id
            and self.season_id == other.season_id
            and np.array_equal(self.weeks, other.weeks)
            and np.array_equal(self.values, other.values)
            and (
                (self.total_visits is None and other.total_visits is None)
                or (
                    self.total_visits is not None
                    and other.total_visits is not None
                    and np.array_equal(self.total_visits, other.total_visits)
                )
            )
            and self.population == other.population
        )

    __hash__ = None


def validate_curve(
    raw: Iterable[tuple[int, float]],
    region_id: str = "",
    season_id: str = "",
    total_visits: Sequence[float] | None = None,
    population: int | None = None,
) -> EpiCurve:
    """Build an :class:`EpiCurve` from ``(week, count)`` pairs.

    The input order is kept as given; out-of-order weeks are reported as
    :class:`NonContiguousWeeks` rather than sorted.
    """
    raw = list(raw)
    if not raw:
        raise TooShort("empty curve")
    weeks = []
    for i, (week, _) in enumerate(raw):
        if int(week) != week:
            raise NonContiguousWeeks(f"week {week!r} is not an integer")
        if i and int(week) != weeks[-1] + 1:
            raise NonContiguousWeeks(f"week {week} does not follow week {weeks[-1]}")
        weeks.append(int(week))
    counts = [float(c) for _, c in raw]
    for week, count in zip(weeks, counts):
        if not math.isfinite(count) or count < 0:
            raise NegativeCount(f"week {week} has invalid count {count}")
    if len(raw) < 2:
        raise TooShort(f"a curve needs at least 2 weeks, got {len(raw)}")
    return EpiCurve(
        weeks=np.array(weeks),
        values=np.array(counts),
        region_id=region_id,
        season_id=season_id,
        total_visits=None if total_visits is None else np.asarray(total_visits, dtype=float),
        population=population,
    )


@dataclass(frozen=True, eq=False)
class ForecastRun:
    """A long-term forecast issued at prediction time ``k``.

    ``weeks`` must be exactly ``k+1 .. k+w``. ``fitted_weeks`` and
    ``fitted_values`` optionally carry the model curve for weeks ``<= k``
    and are only used in calibration mode.
    """

    method_id: str
    prediction_time: int
    weeks: np.ndarray
    values: np.ndarray
    fitted_weeks: np.ndarray | None = None
    fitted_values: np.ndarray | None = None

    def __post_init__(self):
        k = int(self.prediction_time)
        weeks = _frozen(self.weeks, dtype=np.int64)
        values = _frozen(self.values)
        if weeks.ndim != 1 or weeks.shape != values.shape or len(weeks) == 0:
            raise InvalidForecast("a run needs a non-empty 1-d prediction")
        if not np.array_equal(weeks, np.arange(k + 1, k + 1 + len(weeks))):
            raise InvalidForecast(f"run k={k}: predicted weeks must be {k + 1}..{k + len(weeks)}")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise InvalidForecast(f"run k={k}: predicted counts must be finite and >= 0")
        object.__setattr__(self, "prediction_time", k)
        object.__setattr__(self, "weeks", weeks)
        object.__setattr__(self, "values", values)
        if (self.fitted_weeks is None) != (self.fitted_values is None):
            raise InvalidForecast("fitted weeks and values must be given together")
        if self.fitted_weeks is not None:
            fw = _frozen(self.fitted_weeks, dtype=np.int64)
            fv = _frozen(self.fitted_values)
            if fw.shape != fv.shape or len(fw) == 0:
                raise InvalidForecast("fitted weeks/values length mismatch")
            if np.any(np.diff(fw) != 1) or fw[-1] != k:
                raise InvalidForecast(f"run k={k}: fitted weeks must be contiguous and end at {k}")
            if np.any(~np.isfinite(fv)) or np.any(fv < 0):
                raise InvalidForecast(f"run k={k}: fitted counts must be finite and >= 0")
            object.__setattr__(self, "fitted_weeks", fw)
            object.__setattr__(self, "fitted_values", fv)

    @classmethod
    def from_pairs(cls, method_id, k, predicted, fitted=None) -> "ForecastRun":
        predicted = list(predicted)
        fitted = None if fitted is None else list(fitted)
        return cls(
            method_id=method_id,
            prediction_time=k,
            weeks=np.array([w for w, _ in predicted], dtype=np.int64),
            values=np.array([v for _, v in predicted], dtype=float),
            fitted_weeks=None if fitted is None else np.array([w for w, _ in fitted], dtype=np.int64),
            fitted_values=None if fitted is None else np.array([v for _, v in fitted], dtype=float),
        )

    @property
    def horizon(self) -> int:
        return len(self.weeks)

    @property
    def has_fitted(self) -> bool:
        return self.fitted_weeks is not None

    def clipped(self, last_week: int) -> "ForecastRun":
        """Drop predicted weeks beyond ``last_week``."""
        keep = self.weeks <= last_week
        if keep.all():
            return self
        if not keep.any():
            raise InvalidForecast(f"run k={self.prediction_time} lies entirely after week {last_week}")
        return ForecastRun(
            self.method_id,
            self.prediction_time,
            self.weeks[keep],
            self.values[keep],
            self.fitted_weeks,
            self.fitted_values,
        )

    def value_at(self, week: int) -> float:
        return float(self.values[week - self.prediction_time - 1])


@dataclass(frozen=True, eq=False)
class ForecastSet:
    """All runs of one method against one observed curve, keyed by ``k``."""

    method_id: str
    runs: Mapping[int, ForecastRun]
    target: EpiCurve | None = None
    region_id: str = ""

    def __post_init__(self):
        runs = dict(sorted((int(k), r) for k, r in dict(self.runs).items()))
        for k, run in runs.items():
            if run.prediction_time != k:
                raise InvalidForecast(f"run keyed by k={k} has prediction time {run.prediction_time}")
        object.__setattr__(self, "runs", runs)
        if not self.region_id and self.target is not None:
            object.__setattr__(self, "region_id", self.target.region_id)
        if self.target is not None:
            self._check_target(self.target)

    def _check_target(self, target: EpiCurve) -> None:
        lo, hi = target.first_week + 1, target.last_week
        for k, run in self.runs.items():
            if run.weeks[0] < lo or run.weeks[-1] > hi:
                raise InvalidForecast(
                    f"method {self.method_id!r} run k={k} covers weeks "
                    f"{run.weeks[0]}..{run.weeks[-1]}, outside {lo}..{hi}"
                )

    def bind(self, target: EpiCurve, clip: bool = True) -> "ForecastSet":
        """Attach an observed curve, clipping runs that extend past its last week."""
        runs = self.runs
        if clip:
            runs = {}
            for k, run in self.runs.items():
                if run.weeks[0] > target.last_week:
                    continue
                runs[k] = run.clipped(target.last_week)
        return ForecastSet(self.method_id, runs, target, self.region_id or target.region_id)

    @property
    def prediction_times(self) -> list[int]:
        return list(self.runs)


@dataclass(frozen=True)
class AlignedPair:
    weeks: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray
    mode: Mode

    def __len__(self):
        return len(self.weeks)


def align(observed: EpiCurve, run: ForecastRun, mode=Mode.FORECASTING) -> AlignedPair:
    """Pair observed and predicted counts over the evaluation window.

    Forecasting mode keeps weeks after ``k`` only. Calibration mode also
    pairs the run's fitted values for weeks ``<= k``; runs without fitted
    values fall back to forecasting mode.
    """
    mode = Mode.parse(mode)
    weeks = [int(w) for w in run.weeks if observed.first_week <= w <= observed.last_week]
    predicted = [run.value_at(w) for w in weeks]
    if mode is Mode.CALIBRATION:
        if run.has_fitted:
            fitted = [
                (int(w), float(v))
                for w, v in zip(run.fitted_weeks, run.fitted_values)
                if observed.first_week <= w <= observed.last_week
            ]
            weeks = [w for w, _ in fitted] + weeks
            predicted = [v for _, v in fitted] + predicted
        else:
            logger.warning(
                "run k=%d of %r has no fitted values; calibration falls back to forecasting",
                run.prediction_time,
                run.method_id,
            )
    if not weeks:
        raise EmptyOverlap(f"run k={run.prediction_time} shares no week with the observed curve")
    w = np.array(weeks, dtype=np.int64)
    return AlignedPair(
        weeks=w,
        observed=observed.values[w - observed.first_week].copy(),
        predicted=np.array(predicted, dtype=float),
        mode=mode,
    )


def composite_curve(observed: EpiCurve, run: ForecastRun, mode=Mode.FORECASTING) -> EpiCurve:
    """The full-season curve implied by one run.

    Weeks ``<= k`` come from the observed data (or from the run's fitted
    values in calibration mode), weeks ``> k`` from the forecast. The curve
    ends at the run's last predicted week. Observed visit counts and
    population are carried over so denominators stay observed.
    """
    mode = Mode.parse(mode)
    k = run.prediction_time
    last = min(int(run.weeks[-1]), observed.last_week)
    head = observed.window(observed.first_week, k).astype(float)
    if mode is Mode.CALIBRATION and run.has_fitted:
        head = head.copy()
        for w, v in zip(run.fitted_weeks, run.fitted_values):
            if observed.first_week <= w <= k:
                head[w - observed.first_week] = v
    tail = run.values[: max(0, last - k)]
    values = np.concatenate([head, tail])
    weeks = np.arange(observed.first_week, observed.first_week + len(values))
    visits = None
    if observed.total_visits is not None:
        visits = observed.total_visits[: len(values)]
    return EpiCurve(
        weeks=weeks,
        values=values,
        region_id=observed.region_id,
        season_id=observed.season_id,
        total_visits=visits,
        population=observed.population,
    )


# --- stochastic predictions -------------------------------------------------


class DistKind(str, Enum):
    NORMAL = "normal"
    STUDENT_T = "student_t"
    EMPIRICAL = "empirical"


@dataclass(frozen=True, eq=False)
class DistSpec:
    """Predictive distribution of one weekly count.

    Use the constructors :meth:`normal`, :meth:`student_t`,
    :meth:`empirical`, :meth:`point` or :meth:`from_moments`.
    A normal with zero standard deviation is a point mass.
    """

    kind: DistKind
    mean: float = 0.0
    stdev: float = 0.0
    dof: float | None = None
    samples: np.ndarray | None = None
    weights: np.ndarray | None = None
    sample_count: int | None = None

    def __post_init__(self):
        kind = DistKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DistKind.NORMAL:
            if not (math.isfinite(self.mean) and math.isfinite(self.stdev)) or self.stdev < 0:
                raise InvalidSpec(f"normal needs finite mean and stdev >= 0, got {self.stdev}")
        elif kind is DistKind.STUDENT_T:
            if self.dof is None or not self.dof >= 1:
                raise InvalidSpec(f"student-t needs dof >= 1, got {self.dof}")
            if not self.stdev > 0:
                raise InvalidSpec("student-t needs a positive scale")
        else:
            if self.samples is None or len(self.samples) == 0:
                raise InvalidSpec("empirical spec needs at least one sample")
            samples = _frozen(self.samples)
            if np.any(~np.isfinite(samples)):
                raise InvalidSpec("empirical samples must be finite")
            object.__setattr__(self, "samples", samples)
            if self.weights is not None:
                object.__setattr__(self, "weights", _check_weights(self.weights, len(samples)))
        if self.sample_count is not None and not self.sample_count >= 1:
            raise InvalidSpec("sample_count must be a positive integer")

    @classmethod
    def normal(cls, mean, stdev, sample_count=None) -> "DistSpec":
        return cls(DistKind.NORMAL, float(mean), float(stdev), sample_count=sample_count)

    @classmethod
    def student_t(cls, mean, dof, scale, sample_count=None) -> "DistSpec":
        return cls(DistKind.STUDENT_T, float(mean), float(scale), dof=float(dof), sample_count=sample_count)

    @classmethod
    def empirical(cls, samples, weights=None) -> "DistSpec":
        samples = np.asarray(samples, dtype=float)
        return cls(DistKind.EMPIRICAL, samples=samples, weights=weights, sample_count=len(samples))

    @classmethod
    def point(cls, value) -> "DistSpec":
        return cls.normal(value, 0.0)

    @classmethod
    def from_moments(cls, mean, variance, n_samples) -> "DistSpec":
        """Spec for the estimate behind a reported mean and sample variance.

        The spread is the standard error ``sigma / sqrt(n)``; fewer than 30
        samples give a Student-t with ``n - 1`` degrees of freedom.
        """
        n = int(n_samples)
        if n < 1 or variance < 0:
            raise InvalidSpec(f"need n_samples >= 1 and variance >= 0, got {n}, {variance}")
        scale = math.sqrt(variance) / math.sqrt(n)
        if n >= LARGE_SAMPLE or scale == 0:
            return cls.normal(mean, scale, sample_count=n)
        if n < 2:
            raise InvalidSpec("a single sample gives no degrees of freedom")
        return cls.student_t(mean, n - 1, scale, sample_count=n)

    @property
    def is_point_mass(self) -> bool:
        if self.kind is DistKind.NORMAL:
            return self.stdev == 0
        if self.kind is DistKind.EMPIRICAL:
            return bool(np.all(self.samples == self.samples[0]))
        return False

    @property
    def location(self) -> float:
        if self.kind is DistKind.EMPIRICAL:
            return float(np.average(self.samples, weights=self.weights))
        return self.mean

    def pdf(self, x) -> np.ndarray:
        """Density evaluated pointwise; not defined for empirical or point specs."""
        from scipy import stats

        if self.kind is DistKind.NORMAL and self.stdev > 0:
            return stats.norm.pdf(x, loc=self.mean, scale=self.stdev)
        if self.kind is DistKind.STUDENT_T:
            return stats.t.pdf(x, df=self.dof, loc=self.mean, scale=self.stdev)
        raise InvalidSpec(f"{self.kind.value} spec has no pointwise density")


def _check_weights(weights, n) -> np.ndarray:
    w = _frozen(weights)
    if w.shape != (n,):
        raise InvalidSpec(f"expected {n} weights, got shape {w.shape}")
    if np.any(~(w > 0)):
        raise InvalidSpec("weights must be positive")
    if not math.isclose(float(w.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise InvalidSpec(f"weights must sum to 1, got {w.sum()}")
    return w


@dataclass(frozen=True, eq=False)
class Replicates:
    """Replicate predictions of one week, optionally weighted."""

    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.ndim != 1 or len(samples) == 0:
            raise InvalidSpec("replicates must be a non-empty 1-d list")
        object.__setattr__(self, "samples", samples)
        if self.weights is not None:
            object.__setattr__(self, "weights", _check_weights(self.weights, len(samples)))

    def to_spec(self) -> DistSpec:
        return DistSpec.empirical(self.samples, self.weights)


@dataclass(frozen=True, eq=False)
class StochasticSeries:
    """Per-week uncertain predictions of one method, optionally tied to a prediction time."""

    method_id: str
    per_week: Mapping[int, Replicates | DistSpec]
    region_id: str = ""
    prediction_time: int | None = None

    def __post_init__(self):
        per_week = dict(sorted((int(w), v) for w, v in dict(self.per_week).items()))
        for week, entry in per_week.items():
            if not isinstance(entry, (Replicates, DistSpec)):
                raise InvalidSpec(f"week {week}: expected Replicates or DistSpec, got {type(entry).__name__}")
        object.__setattr__(self, "per_week", per_week)

    @property
    def weeks(self) -> list[int]:
        return list(self.per_week)

    def specs(self) -> list[DistSpec]:
        return [e.to_spec() if isinstance(e, Replicates) else e for e in self.per_week.values()]


@dataclass(frozen=True, eq=False)
class ReplicateMatrix:
    """Weeks x series grid of replicate predictions."""

    values: np.ndarray
    weights: np.ndarray | None = None
    weeks: np.ndarray | None = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.size == 0:
            raise InvalidSpec("replicate matrix must be a non-empty weeks x series grid")
        object.__setattr__(self, "values", values)
        if self.weights is not None:
            object.__setattr__(self, "weights", _check_weights(self.weights, values.shape[1]))
        if self.weeks is not None:
            object.__setattr__(self, "weeks", _frozen(self.weeks, dtype=np.int64))

    @property
    def n_series(self) -> int:
        return self.values.shape[1]
