"""Evaluation of stochastic forecasts.

Covers replicate aggregation (per-week measures across series, optionally
weighted), seeded bootstrap sampling from predictive distributions,
distances between densities, and Monte-Carlo estimates of the usual error
measures when the forecast, or both forecast and observation, are
distributions.

Sampling for week ``t`` uses a generator seeded by ``(seed, t, stream)``
so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .curves import DistKind, DistSpec, ReplicateMatrix, Replicates, StochasticSeries
from .exceptions import (
    ClosedFormUnavailable,
    DegenerateGeometricMeanWarning,
    InvalidSpec,
    LengthMismatch,
    ZeroDenominator,
    ZeroRwCumulative,
    ZeroRwError,
)
from .measures import CORRECTED, MeasureId, percentage_errors, symmetric_percentage_errors

DEFAULT_SAMPLE_SIZE = 10_000
MIN_SAMPLE_SIZE = 1_000


def _uniform(weights) -> bool:
    return weights is None or bool(np.all(np.asarray(weights) == np.asarray(weights)[0]))


def weighted_mean(values, weights=None) -> float:
    v = np.asarray(values, dtype=float)
    if _uniform(weights):
        return float(np.mean(v))
    return float(np.average(v, weights=weights))


def weighted_median(values, weights=None) -> float:
    """Median honouring weights; a cumulative weight of exactly one half takes the midpoint."""
    v = np.asarray(values, dtype=float)
    if _uniform(weights):
        return float(np.median(v))
    w = np.asarray(weights, dtype=float)
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    cw = np.cumsum(w)
    half = cw[-1] / 2.0
    i = int(np.searchsorted(cw, half))
    i = min(i, len(v) - 1)
    if math.isclose(cw[i], half, rel_tol=1e-12) and i + 1 < len(v):
        return float((v[i] + v[i + 1]) / 2.0)
    return float(v[i])


def _geometric_mean(values, weights=None) -> float:
    v = np.asarray(values, dtype=float)
    if np.any(v == 0):
        warnings.warn(
            "a zero relative error collapses the geometric mean to 0",
            DegenerateGeometricMeanWarning,
            stacklevel=3,
        )
        return 0.0
    logs = np.log(np.abs(v))
    return float(np.exp(weighted_mean(logs, weights)))


# --- replicate measures -----------------------------------------------------


class ReplicateMeasure(str, Enum):
    MAE_t = "MAE_t"
    MAPE_t = "MAPE_t"
    sMAPE_t = "sMAPE_t"
    MdAPE_t = "MdAPE_t"
    GMRAE_t = "GMRAE_t"
    MdRAE_t = "MdRAE_t"
    RMSE_t = "RMSE_t"
    PB_t = "PB_t"


class CumulativeMeasure(str, Enum):
    CumRAE_s = "CumRAE_s"
    GMCumRAE = "GMCumRAE"
    MdCumRAE = "MdCumRAE"


def replicate_measure(measure, observed: float, replicates, rw_error=None, weights=None, epsilon=None) -> float:
    """One week's measure aggregated across the replicate series.

    Parameters
    ----------
    measure : ReplicateMeasure or str
    observed : float
        Observed value ``y_t``.
    replicates : array-like or Replicates
        Predictions ``x_{t,s}`` of the ``S`` series.
    rw_error : float or array-like, optional
        Random-walk error ``y_t - x_RW`` (scalar or one per series); needed
        by the RAE family and PB.
    weights : array-like, optional
        Series weights; the means and medians become weighted ones.
    epsilon : float, optional
        Denominator used when ``y_t`` is zero.
    """
    m = ReplicateMeasure(measure)
    if isinstance(replicates, Replicates):
        weights = replicates.weights if weights is None else weights
        replicates = replicates.samples
    x = np.asarray(replicates, dtype=float).ravel()
    if len(x) == 0:
        raise InvalidSpec("no replicates")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != x.shape:
            raise LengthMismatch("weights must match the replicates")
    y = np.full_like(x, float(observed))
    e = np.abs(y - x)

    if m is ReplicateMeasure.MAE_t:
        return weighted_mean(e, weights)
    if m is ReplicateMeasure.RMSE_t:
        return math.sqrt(weighted_mean(e * e, weights))
    if m in (ReplicateMeasure.MAPE_t, ReplicateMeasure.MdAPE_t):
        apes = percentage_errors(y, x, CORRECTED if epsilon is not None else "strict", epsilon)
        if m is ReplicateMeasure.MAPE_t:
            return weighted_mean(apes, weights)
        return weighted_median(apes, weights)
    if m is ReplicateMeasure.sMAPE_t:
        return weighted_mean(symmetric_percentage_errors(y, x), weights)

    if rw_error is None:
        raise ZeroRwError(f"{m.value} needs the random-walk error")
    e_rw = np.abs(np.broadcast_to(np.asarray(rw_error, dtype=float), x.shape))
    if m is ReplicateMeasure.PB_t:
        return weighted_mean((e <= e_rw).astype(float), weights)
    if np.any(e_rw == 0):
        raise ZeroRwError("random-walk error is zero")
    rae = e / e_rw
    if m is ReplicateMeasure.GMRAE_t:
        return _geometric_mean(rae, weights)
    return weighted_median(rae, weights)


def replicate_measure_series(measure, observed, matrix: ReplicateMatrix, rw=None, epsilon=None):
    """Per-week replicate measure plus its mean and median across weeks.

    ``rw`` is the random-walk forecast per week (not its error).
    Returns ``(per_week, mean, median)``.
    """
    y = np.asarray(observed, dtype=float)
    if len(y) != matrix.values.shape[0]:
        raise LengthMismatch("observed series must have one value per matrix row")
    rw_err = None if rw is None else y - np.asarray(rw, dtype=float)
    per_week = np.array(
        [
            replicate_measure(
                measure,
                y[t],
                matrix.values[t],
                None if rw_err is None else rw_err[t],
                matrix.weights,
                epsilon,
            )
            for t in range(len(y))
        ]
    )
    return per_week, float(per_week.mean()), float(np.median(per_week))


def cumulative_relative(measure, observed, replicates, rw, weights=None):
    """Cumulative relative absolute error of each series against the random walk.

    ``replicates`` is a weeks x series array (or :class:`ReplicateMatrix`),
    ``rw`` the random-walk forecast, either per week or weeks x series.
    ``CumRAE_s`` returns one value per series; the GM/Md forms aggregate
    them across series.
    """
    m = CumulativeMeasure(measure)
    if isinstance(replicates, ReplicateMatrix):
        weights = replicates.weights if weights is None else weights
        replicates = replicates.values
    x = np.asarray(replicates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(observed, dtype=float)
    if y.shape[0] != x.shape[0]:
        raise LengthMismatch("observed and replicate series must be aligned")
    rw = np.asarray(rw, dtype=float)
    if rw.ndim == 1:
        rw = rw[:, None]
    rw = np.broadcast_to(rw, x.shape)
    num = np.abs(y[:, None] - x).sum(axis=0)
    den = np.abs(y[:, None] - rw).sum(axis=0)
    if np.any(den == 0):
        raise ZeroRwCumulative("random-walk cumulative error is zero")
    cum = num / den
    if m is CumulativeMeasure.CumRAE_s:
        return cum
    if m is CumulativeMeasure.GMCumRAE:
        return _geometric_mean(cum, weights)
    return weighted_median(cum, weights)


# --- sampling ---------------------------------------------------------------


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


@dataclass(frozen=True, eq=False)
class SampleSet:
    samples: np.ndarray
    source: DistSpec
    seed: int
    size: int


def _draw(spec: DistSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    if spec.kind is DistKind.NORMAL:
        if spec.stdev == 0:
            return np.full(size, spec.mean)
        return rng.normal(spec.mean, spec.stdev, size)
    if spec.kind is DistKind.STUDENT_T:
        return spec.mean + spec.stdev * rng.standard_t(spec.dof, size)
    return rng.choice(spec.samples, size=size, replace=True, p=spec.weights)


def sample_pdf(spec: DistSpec, size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0, *, _keys: Sequence[int] = ()) -> SampleSet:
    """Bootstrap sample set drawn from ``spec``; identical for identical arguments."""
    if not isinstance(spec, DistSpec):
        raise InvalidSpec(f"expected a DistSpec, got {type(spec).__name__}")
    if int(size) < MIN_SAMPLE_SIZE:
        raise InvalidSpec(f"sample size must be >= {MIN_SAMPLE_SIZE}, got {size}")
    if spec.sample_count is not None and size < 10 * spec.sample_count:
        warnings.warn(f"sample size {size} is not much larger than N_x={spec.sample_count}", stacklevel=2)
    samples = _draw(spec, int(size), _rng(seed, *_keys))
    samples.setflags(write=False)
    return SampleSet(samples, spec, int(seed), int(size))


# --- distances between densities --------------------------------------------


class Distance(str, Enum):
    BHATTACHARYYA = "bhattacharyya"
    HELLINGER = "hellinger"
    JACCARD = "jaccard"


@dataclass(frozen=True)
class Sampled:
    size: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0


CLOSED_FORM = "closed_form"


def bhattacharyya_coefficient_normal(mu_p, sigma_p, mu_q, sigma_q) -> float:
    s2 = sigma_p**2 + sigma_q**2
    return math.sqrt(2.0 * sigma_p * sigma_q / s2) * math.exp(-((mu_p - mu_q) ** 2) / (4.0 * s2))


def bhattacharyya_normal(mu_p, sigma_p, mu_q, sigma_q) -> float:
    vp, vq = sigma_p**2, sigma_q**2
    return 0.25 * math.log(0.25 * (vp / vq + vq / vp + 2.0)) + 0.25 * (mu_p - mu_q) ** 2 / (vp + vq)


def hellinger_normal(mu_p, sigma_p, mu_q, sigma_q) -> float:
    bc = bhattacharyya_coefficient_normal(mu_p, sigma_p, mu_q, sigma_q)
    return math.sqrt(max(0.0, 2.0 * (1.0 - bc)))


def _normal_params(spec: DistSpec):
    if spec.kind is not DistKind.NORMAL or spec.stdev <= 0:
        raise ClosedFormUnavailable(f"closed form needs non-degenerate normals, got {spec.kind.value}")
    return spec.mean, spec.stdev


def pdf_distance(kind, p: DistSpec, q: DistSpec, method=CLOSED_FORM) -> float:
    """Distance between two predictive densities.

    ``method`` is ``"closed_form"`` (normals only; Bhattacharyya and
    Hellinger) or a :class:`Sampled` instance. The sampled form pools equal
    sized draws from both densities. Jaccard sums the density products over
    the pooled points; Bhattacharyya and Hellinger estimate the overlap
    coefficient by importance weighting the pooled points with the mixture
    density, which keeps them comparable to the closed forms.
    """
    kind = Distance(str(kind).lower() if not isinstance(kind, Distance) else kind)
    if method == CLOSED_FORM:
        if kind is Distance.JACCARD:
            raise ClosedFormUnavailable("the Jaccard distance has no closed form here")
        mp, sp = _normal_params(p)
        mq, sq = _normal_params(q)
        if kind is Distance.BHATTACHARYYA:
            return bhattacharyya_normal(mp, sp, mq, sq)
        return hellinger_normal(mp, sp, mq, sq)
    if not isinstance(method, Sampled):
        raise ValueError(f"unknown method {method!r}")

    sx = sample_pdf(p, method.size, method.seed, _keys=(0,)).samples
    sy = sample_pdf(q, method.size, method.seed, _keys=(1,)).samples
    pooled = np.concatenate([sx, sy])
    f, g = p.pdf(pooled), q.pdf(pooled)
    if kind is Distance.JACCARD:
        fg = float(np.sum(f * g))
        den = float(np.sum(f * f) + np.sum(g * g)) - fg
        if den <= 0:
            raise ZeroDenominator("both densities vanish on every pooled sample")
        return 1.0 - fg / den
    mix = 0.5 * (f + g)
    bc = float(np.mean(np.sqrt(f * g) / mix))
    bc = min(max(bc, 0.0), 1.0)
    if kind is Distance.BHATTACHARYYA:
        return math.inf if bc == 0 else -math.log(bc)
    return math.sqrt(2.0 * (1.0 - bc))


# --- error measures with distributions --------------------------------------

STOCHASTIC_MEASURES = (
    MeasureId.MAE,
    MeasureId.RMSE,
    MeasureId.MAPE,
    MeasureId.sMAPE,
    MeasureId.MdAPE,
    MeasureId.MdsAPE,
)
_MEDIAN_KERNELS = (MeasureId.MdAPE, MeasureId.MdsAPE)


@dataclass(frozen=True, eq=False)
class StochasticScores:
    """Monte-Carlo error estimates of one method.

    ``per_week[m]`` holds the week-level estimate of measure ``m``: the
    expected absolute error, root expected squared error, expected APE and
    sAPE, or the median APE/sAPE across the sample set. ``aggregate``
    averages across weeks (medians for the Md measures; RMSE is the root of
    the mean expected squared error); ``aggregate_median`` takes medians
    across weeks for every measure. ``stderr`` is the Monte-Carlo standard
    error of the mean-type aggregates.
    """

    weeks: np.ndarray
    per_week: dict
    aggregate: dict
    aggregate_median: dict
    stderr: dict = field(default_factory=dict)
    size: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0


def _as_specs(pred) -> tuple[list[int] | None, list[DistSpec]]:
    if isinstance(pred, StochasticSeries):
        return pred.weeks, pred.specs()
    specs = [p.to_spec() if isinstance(p, Replicates) else p for p in pred]
    for s in specs:
        if not isinstance(s, DistSpec):
            raise InvalidSpec(f"expected DistSpec or Replicates, got {type(s).__name__}")
    return None, specs


def _score(weeks, draws_x, draws_y, size, seed, epsilon=None) -> StochasticScores:
    per_week = {m: [] for m in STOCHASTIC_MEASURES}
    sq_terms, se = [], {MeasureId.MAE: [], MeasureId.MAPE: [], MeasureId.sMAPE: []}
    for sx, sy in zip(draws_x, draws_y):
        e = np.abs(sy - sx)
        apes = percentage_errors(sy, sx, CORRECTED, epsilon)
        sapes = symmetric_percentage_errors(sy, sx)
        sq = float(np.mean(e * e))
        sq_terms.append(sq)
        per_week[MeasureId.MAE].append(float(np.mean(e)))
        per_week[MeasureId.RMSE].append(math.sqrt(sq))
        per_week[MeasureId.MAPE].append(float(np.mean(apes)))
        per_week[MeasureId.sMAPE].append(float(np.mean(sapes)))
        per_week[MeasureId.MdAPE].append(float(np.median(apes)))
        per_week[MeasureId.MdsAPE].append(float(np.median(sapes)))
        n = len(e)
        for m, terms in ((MeasureId.MAE, e), (MeasureId.MAPE, apes), (MeasureId.sMAPE, sapes)):
            se[m].append(float(np.std(terms, ddof=1)) / math.sqrt(n) if n > 1 else 0.0)
    per_week = {m: np.array(v) for m, v in per_week.items()}
    aggregate = {}
    for m, v in per_week.items():
        if m is MeasureId.RMSE:
            aggregate[m] = math.sqrt(float(np.mean(sq_terms)))
        elif m in _MEDIAN_KERNELS:
            aggregate[m] = float(np.median(v))
        else:
            aggregate[m] = float(np.mean(v))
    aggregate_median = {m: float(np.median(v)) for m, v in per_week.items()}
    n_weeks = len(weeks)
    stderr = {m: math.sqrt(float(np.sum(np.square(v)))) / n_weeks for m, v in se.items()}
    return StochasticScores(np.asarray(weeks, dtype=np.int64), per_week, aggregate, aggregate_median, stderr, size, seed)


def measures_vs_point(pred, observed, size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0, weeks=None) -> StochasticScores:
    """Expected error measures of a distributional forecast against fixed observations.

    ``pred`` is a :class:`StochasticSeries` or one ``DistSpec``/``Replicates``
    per week; ``observed`` the aligned observed counts.
    """
    spec_weeks, specs = _as_specs(pred)
    y = np.asarray(observed, dtype=float)
    if len(y) != len(specs):
        raise LengthMismatch(f"{len(specs)} predictive specs for {len(y)} observations")
    weeks = list(weeks if weeks is not None else spec_weeks if spec_weeks is not None else range(1, len(y) + 1))
    if len(weeks) != len(y):
        raise LengthMismatch("weeks must match the observed series")
    eps = None
    if np.any(y == 0) and np.any(y != 0):
        eps = float(np.min(np.abs(y[y != 0])))
    draws_x = [sample_pdf(s, size, seed, _keys=(w, 0)).samples for s, w in zip(specs, weeks)]
    draws_y = [np.full(len(dx), yt) for dx, yt in zip(draws_x, y)]
    return _score(weeks, draws_x, draws_y, size, seed, eps)


def measures_between_pdfs(pred, observed, size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0, weeks=None) -> StochasticScores:
    """Expected error measures when both forecast and observation are distributions.

    Each week draws equal-size sample sets from both and averages the
    error kernel over the independently paired draws. The forecast draws
    use the same streams as :func:`measures_vs_point`.
    """
    spec_weeks, pred_specs = _as_specs(pred)
    obs_weeks, obs_specs = _as_specs(observed)
    if len(pred_specs) != len(obs_specs):
        raise LengthMismatch(f"{len(pred_specs)} predictive specs for {len(obs_specs)} observed specs")
    weeks = list(
        weeks
        if weeks is not None
        else spec_weeks
        if spec_weeks is not None
        else obs_weeks
        if obs_weeks is not None
        else range(1, len(pred_specs) + 1)
    )
    if len(weeks) != len(pred_specs):
        raise LengthMismatch("weeks must match the series")
    draws_x = [sample_pdf(s, size, seed, _keys=(w, 0)).samples for s, w in zip(pred_specs, weeks)]
    draws_y = [sample_pdf(s, size, seed, _keys=(w, 1)).samples for s, w in zip(obs_specs, weeks)]
    return _score(weeks, draws_x, draws_y, size, seed)
