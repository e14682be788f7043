"""Deterministic error measures and feature-level error series.

All measures work on absolute errors ``|e_t| = |y_t - x_t|`` and are
"lower is better" except :attr:`MeasureId.PB`. Zero observations are
handled by the epsilon policy: ``"corrected"`` (default) replaces a zero
denominator by the smallest non-zero observed magnitude, ``"strict"``
raises :class:`~epieval.exceptions.DivisionByZero`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .curves import EpiCurve, ForecastSet, Mode, composite_curve
from .exceptions import (
    DivisionByZero,
    EmptySeries,
    FeatureAbsent,
    LengthMismatch,
    MissingRun,
)
from .features import FeatureConfig, FeatureVector, extract_all


class MeasureId(str, Enum):
    MAE = "MAE"
    RMSE = "RMSE"
    MAPE = "MAPE"
    cMAPE = "cMAPE"
    sMAPE = "sMAPE"
    MdAPE = "MdAPE"
    MdsAPE = "MdsAPE"
    MARE = "MARE"
    RelMAE = "RelMAE"
    MASE = "MASE"
    PB = "PB"
    MAAPE = "MAAPE"
    NMSE = "NMSE"
    APE = "APE"
    sAPE = "sAPE"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, value) -> "MeasureId":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for m in cls:
            if m.value.lower() == key.lower():
                return m
        raise ValueError(f"unknown measure {value!r}")


#: The six measures used for feature rankings.
DEFAULT_MEASURES = (
    MeasureId.MAE,
    MeasureId.RMSE,
    MeasureId.MAPE,
    MeasureId.sMAPE,
    MeasureId.MdAPE,
    MeasureId.MdsAPE,
)
HIGHER_IS_BETTER = frozenset({MeasureId.PB})
SCALAR_MEASURES = frozenset({MeasureId.APE, MeasureId.sAPE})

CORRECTED = "corrected"
STRICT = "strict"


def _pair(observed, predicted) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(observed, dtype=float).ravel()
    x = np.asarray(predicted, dtype=float).ravel()
    if y.shape != x.shape:
        raise LengthMismatch(f"observed has {len(y)} points, predicted {len(x)}")
    if len(y) == 0:
        raise EmptySeries("measures need at least one point")
    return y, x


def min_nonzero(observed) -> float:
    """Smallest non-zero observed magnitude, the default cMAPE epsilon."""
    mags = np.abs(np.asarray(observed, dtype=float))
    nz = mags[mags > 0]
    if len(nz) == 0:
        raise DivisionByZero("all observations are zero; no epsilon available")
    return float(nz.min())


def percentage_errors(observed, predicted, epsilon_policy=CORRECTED, epsilon=None) -> np.ndarray:
    """Per-point ``|e_t / y_t|`` with zero observations handled by the policy."""
    y, x = _pair(observed, predicted)
    denom = np.abs(y)
    zero = denom == 0
    if zero.any():
        if epsilon_policy == STRICT:
            raise DivisionByZero("zero observation in a percentage error")
        eps = min_nonzero(y) if epsilon is None else float(epsilon)
        if not eps > 0:
            raise DivisionByZero("epsilon must be > 0")
        denom = np.where(zero, denom + eps, denom)
    return np.abs(y - x) / denom


def symmetric_percentage_errors(observed, predicted, epsilon_policy=CORRECTED) -> np.ndarray:
    """Per-point ``2|e_t| / (y_t + x_t)``.

    A point with ``y_t + x_t == 0`` is a perfect zero prediction; the
    corrected policy scores it 0, the strict one raises.
    """
    y, x = _pair(observed, predicted)
    e = np.abs(y - x)
    denom = np.abs(y + x)
    zero = denom == 0
    if zero.any():
        if epsilon_policy == STRICT:
            raise DivisionByZero("y_t + x_t == 0 in a symmetric percentage error")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 2.0 * e / denom
    return np.where(zero, 0.0, out)


def random_walk(observed, previous: float | None = None) -> np.ndarray:
    """One-step naive forecast ``y(t-1)``; the first week repeats ``previous`` or ``y(1)``."""
    y = np.asarray(observed, dtype=float)
    rw = np.empty_like(y)
    if len(y) == 0:
        return rw
    rw[0] = y[0] if previous is None else previous
    rw[1:] = y[:-1]
    return rw


def _relative_errors(y, x, rw, epsilon_policy) -> np.ndarray:
    e = np.abs(y - x)
    e_rw = np.abs(y - rw)
    zero = e_rw == 0
    if zero.any():
        if epsilon_policy == STRICT or zero.all():
            raise DivisionByZero("random-walk error is zero")
        # an undefined ratio carries no information about either forecaster
        return e[~zero] / e_rw[~zero]
    return e / e_rw


def compute_measure(
    measure,
    observed,
    predicted,
    *,
    epsilon_policy: str = CORRECTED,
    epsilon: float | None = None,
    rw_reference=None,
) -> float:
    """Value of one error measure for a paired series.

    Parameters
    ----------
    measure : MeasureId or str
    observed, predicted : array-like
        Equal-length series ``y`` and ``x``.
    epsilon_policy : {"corrected", "strict"}
        How zero denominators are treated (see module docstring).
    epsilon : float, optional
        cMAPE epsilon; defaults to the smallest non-zero observation.
    rw_reference : array-like, optional
        Random-walk forecast for MARE, RelMAE and PB. Defaults to
        :func:`random_walk` of ``observed``.
    """
    m = MeasureId.parse(measure)
    if epsilon_policy not in (CORRECTED, STRICT):
        raise ValueError(f"unknown epsilon policy {epsilon_policy!r}")
    y, x = _pair(observed, predicted)
    e = y - x
    n = len(y)

    if m in SCALAR_MEASURES:
        if n != 1:
            raise LengthMismatch(f"{m} applies to a single pair, got {n}")
        return ape(y[0], x[0], epsilon_policy, epsilon) if m is MeasureId.APE else sape(y[0], x[0], epsilon_policy)
    if m is MeasureId.MAE:
        return float(np.mean(np.abs(e)))
    if m is MeasureId.RMSE:
        return float(np.sqrt(np.mean(e * e)))
    if m is MeasureId.MAPE:
        return float(np.mean(percentage_errors(y, x, epsilon_policy, epsilon)))
    if m is MeasureId.cMAPE:
        return float(np.mean(percentage_errors(y, x, CORRECTED, epsilon)))
    if m is MeasureId.sMAPE:
        return float(np.mean(symmetric_percentage_errors(y, x, epsilon_policy)))
    if m in (MeasureId.MdAPE, MeasureId.MdsAPE):
        return median_measure(m, y, x, epsilon_policy=epsilon_policy, epsilon=epsilon)
    if m is MeasureId.MAAPE:
        # arctan2 keeps zero observations finite: pi/2 for a miss, 0 for a hit
        return float(np.mean(np.arctan2(np.abs(e), np.abs(y))))
    if m is MeasureId.MASE:
        if n < 2:
            raise LengthMismatch("MASE needs at least 2 points")
        scale = np.mean(np.abs(np.diff(y)))
        if scale == 0:
            raise DivisionByZero("MASE scale is zero for a constant observed series")
        return float(np.mean(np.abs(e)) / scale)
    if m is MeasureId.NMSE:
        if n < 2:
            raise LengthMismatch("NMSE needs at least 2 points")
        var = np.var(y, ddof=1)
        if var == 0:
            raise DivisionByZero("NMSE variance is zero for a constant observed series")
        return float(np.mean(e * e) / var)

    rw = random_walk(y) if rw_reference is None else np.asarray(rw_reference, dtype=float)
    if rw.shape != y.shape:
        raise LengthMismatch("random-walk reference must match the observed series")
    if m is MeasureId.MARE:
        return float(np.mean(_relative_errors(y, x, rw, epsilon_policy)))
    if m is MeasureId.RelMAE:
        total_rw = np.sum(np.abs(y - rw))
        if total_rw == 0:
            raise DivisionByZero("random-walk cumulative error is zero")
        return float(np.sum(np.abs(e)) / total_rw)
    if m is MeasureId.PB:
        return float(np.mean(np.abs(e) <= np.abs(y - rw)))
    raise ValueError(f"unhandled measure {m}")  # pragma: no cover


def median_measure(measure, observed, predicted, *, epsilon_policy=CORRECTED, epsilon=None) -> float:
    """MdAPE or MdsAPE; even counts use the midpoint of the two middle values."""
    m = MeasureId.parse(measure)
    if m is MeasureId.MdAPE:
        terms = percentage_errors(observed, predicted, epsilon_policy, epsilon)
    elif m is MeasureId.MdsAPE:
        terms = symmetric_percentage_errors(observed, predicted, epsilon_policy)
    else:
        raise ValueError(f"{m} is not a median measure")
    return float(np.median(terms))


def ape(observed: float, predicted: float, epsilon_policy=CORRECTED, epsilon=None) -> float:
    """Absolute percentage error of one scalar prediction."""
    y, x = float(observed), float(predicted)
    if y == 0:
        if x == 0:
            return 0.0
        if epsilon_policy == STRICT or epsilon is None:
            raise DivisionByZero("APE of a zero observation")
        return abs(x) / float(epsilon)
    return abs(y - x) / abs(y)


def sape(observed: float, predicted: float, epsilon_policy=CORRECTED) -> float:
    """Symmetric absolute percentage error of one scalar prediction."""
    y, x = float(observed), float(predicted)
    denom = abs(y + x)
    if denom == 0:
        if epsilon_policy == STRICT:
            raise DivisionByZero("sAPE with y + x == 0")
        return 0.0
    return 2.0 * abs(y - x) / denom


# --- feature-level errors ---------------------------------------------------


@dataclass(frozen=True)
class FeaturePoint:
    k: int
    predicted: float
    observed: float

    @property
    def error(self) -> float:
        return self.observed - self.predicted


@dataclass(frozen=True)
class FeatureErrorSeries:
    """Per-prediction-time errors of one method on one feature."""

    method_id: str
    feature_id: str
    points: tuple[FeaturePoint, ...]
    observed_value: float
    occurrence_week: int | None = None
    gaps: tuple[int, ...] = ()
    mode: Mode = Mode.FORECASTING
    notes: dict = field(default_factory=dict)

    @property
    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.points], dtype=np.int64)

    @property
    def predicted(self) -> np.ndarray:
        return np.array([p.predicted for p in self.points], dtype=float)

    @property
    def observed(self) -> np.ndarray:
        return np.array([p.observed for p in self.points], dtype=float)

    @property
    def errors(self) -> np.ndarray:
        return self.observed - self.predicted

    def __len__(self):
        return len(self.points)


def feature_error_series(
    fset: ForecastSet,
    feature_id: str,
    cfg: FeatureConfig,
    mode=Mode.FORECASTING,
    observed_features: FeatureVector | None = None,
) -> FeatureErrorSeries:
    """Pair each run's predicted feature with the observed one.

    The predicted feature of run ``k`` is extracted from the whole-season
    curve made of the observed weeks up to ``k`` followed by the run's
    forecast. In forecasting mode runs issued at or after the week the
    observed feature occurred are dropped. Runs whose curve lacks the
    feature are reported in ``gaps``.
    """
    mode = Mode.parse(mode)
    target = fset.target
    if target is None:
        raise ValueError(f"forecast set {fset.method_id!r} is not bound to an observed curve")
    obs = observed_features if observed_features is not None else extract_all(target, cfg)
    y = obs.get(feature_id)
    if y is None:
        reason = "; ".join(f"{k}: {v}" for k, v in obs.diagnostics.items())
        raise FeatureAbsent(f"observed curve has no {feature_id} ({reason})")
    occurred = obs.occurrence_week(feature_id)
    points, gaps = [], []
    for k, run in fset.runs.items():
        if mode is Mode.FORECASTING and occurred is not None and k >= occurred:
            continue
        curve = composite_curve(target, run, mode)
        x = extract_all(curve, cfg).get(feature_id)
        if x is None:
            gaps.append(k)
            continue
        points.append(FeaturePoint(k, float(x), float(y)))
    return FeatureErrorSeries(
        method_id=fset.method_id,
        feature_id=feature_id,
        points=tuple(points),
        observed_value=float(y),
        occurrence_week=occurred,
        gaps=tuple(gaps),
        mode=mode,
    )


def aggregate_feature_errors(
    series: FeatureErrorSeries,
    observed_value: float | None = None,
    measures: Iterable = DEFAULT_MEASURES,
    epsilon_policy: str = CORRECTED,
) -> dict[MeasureId, float]:
    """One error-matrix row: each measure over the per-``k`` scalar pairs."""
    if len(series) == 0:
        raise EmptySeries(f"no prediction times for {series.method_id!r} on {series.feature_id}")
    x = series.predicted
    y = series.observed if observed_value is None else np.full_like(x, float(observed_value))
    return {MeasureId.parse(m): compute_measure(m, y, x, epsilon_policy=epsilon_policy) for m in measures}


@dataclass(frozen=True)
class OneStepCurve:
    method_id: str
    weeks: np.ndarray
    values: np.ndarray


def one_step_ahead_curve(fset: ForecastSet, t_b: int | None = None, t_e: int | None = None) -> OneStepCurve:
    """First predicted week of every run for ``k = t_b .. t_e``.

    Defaults are the second week and the second-to-last week of the
    observed curve, giving predictions for weeks ``t_b+1 .. t_e+1``.
    """
    target = fset.target
    if t_b is None or t_e is None:
        if target is None:
            raise ValueError("t_b and t_e are required for an unbound forecast set")
        t_b = target.first_week + 1 if t_b is None else t_b
        t_e = target.last_week - 1 if t_e is None else t_e
    ks = range(int(t_b), int(t_e) + 1)
    missing = [k for k in ks if k not in fset.runs]
    if missing:
        raise MissingRun(missing)
    weeks = np.array([k + 1 for k in ks], dtype=np.int64)
    values = np.array([fset.runs[k].value_at(k + 1) for k in ks], dtype=float)
    return OneStepCurve(fset.method_id, weeks, values)


def measure_table(observed: EpiCurve | Sequence[float], curves: Sequence[OneStepCurve], measures=DEFAULT_MEASURES):
    """Measures of several one-step-ahead curves against the observed counts."""
    out = {}
    for c in curves:
        if isinstance(observed, EpiCurve):
            y = observed.values[c.weeks - observed.first_week]
        else:
            y = np.asarray(observed, dtype=float)
        out[c.method_id] = {MeasureId.parse(m): compute_measure(m, y, c.values) for m in measures}
    return out
