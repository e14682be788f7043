"""Competition ranks, consensus rankings, horizon rankings and MAPE clusters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import EmptyMatrix, NegativeMape, NoCommonPredictionTimes, NonFiniteValue
from .measures import CORRECTED, HIGHER_IS_BETTER, FeatureErrorSeries, MeasureId, ape, sape


def rank_column(values: Sequence[float], lower_is_better: bool = True) -> np.ndarray:
    """Competition ranks ("1224"): ties share the best rank, the next one skips.

    >>> rank_column([1.7, 1.4, 1.5, 1.1, 2.1, 1.5]).tolist()
    [5, 2, 3, 1, 6, 3]
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise EmptyMatrix("rank_column needs a non-empty 1-d column")
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue("cannot rank non-finite values")
    if not lower_is_better:
        v = -v
    # rank = 1 + number of strictly better entries
    return 1 + np.sum(v[None, :] < v[:, None], axis=1).astype(np.int64)


def midpoint_median(values) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class ErrorMatrix:
    """Methods x measures error values."""

    methods: tuple[str, ...]
    measures: tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        methods, measures = tuple(self.methods), tuple(str(m) for m in self.measures)
        if cells.shape != (len(methods), len(measures)):
            raise EmptyMatrix(f"cells shape {cells.shape} does not match {len(methods)} x {len(measures)}")
        if cells.size == 0:
            raise EmptyMatrix("error matrix is empty")
        if not np.all(np.isfinite(cells)):
            raise NonFiniteValue("error matrix has non-finite cells")
        if np.any(cells < 0):
            raise NonFiniteValue("error matrix cells must be >= 0")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "measures", measures)

    @classmethod
    def from_rows(cls, rows: Mapping[str, Mapping], measures=None) -> "ErrorMatrix":
        methods = list(rows)
        if not methods:
            raise EmptyMatrix("no rows")
        if measures is None:
            measures = list(rows[methods[0]])
        cells = [[rows[m][c] for c in measures] for m in methods]
        return cls(tuple(methods), tuple(str(c) for c in measures), np.array(cells, dtype=float))

    def column(self, measure) -> np.ndarray:
        return self.cells[:, self.measures.index(str(measure))]


@dataclass(frozen=True)
class RankMatrix:
    methods: tuple[str, ...]
    measures: tuple[str, ...]
    ranks: np.ndarray
    consensus: np.ndarray
    median_rank: np.ndarray

    def row(self, method: str) -> np.ndarray:
        return self.ranks[self.methods.index(method)]

    def as_rows(self) -> list[dict]:
        out = []
        for i, m in enumerate(self.methods):
            row = {"method": m}
            row.update({c: int(self.ranks[i, j]) for j, c in enumerate(self.measures)})
            row["consensus"] = float(self.consensus[i])
            row["median"] = float(self.median_rank[i])
            out.append(row)
        return out


def _lower_is_better(measure: str) -> bool:
    try:
        return MeasureId.parse(measure) not in HIGHER_IS_BETTER
    except ValueError:
        return True


def rank_matrix(errors: ErrorMatrix) -> RankMatrix:
    """Rank every measure column and attach the consensus over measures."""
    ranks = np.column_stack(
        [rank_column(errors.cells[:, j], _lower_is_better(m)) for j, m in enumerate(errors.measures)]
    )
    consensus, median = consensus_over_measures(ranks)
    return RankMatrix(errors.methods, errors.measures, ranks, consensus, median)


def _row_stats(matrix) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(matrix, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.size == 0:
        raise EmptyMatrix("need a non-empty methods x columns matrix")
    if not np.all(np.isfinite(a)):
        raise NonFiniteValue("matrix has non-finite entries")
    return a.mean(axis=1), np.median(a, axis=1)


def consensus_over_measures(ranks) -> tuple[np.ndarray, np.ndarray]:
    """Per-method mean and midpoint median of ranks across measure columns.

    ``ranks`` is a methods x measures array or a :class:`RankMatrix`.
    """
    if isinstance(ranks, RankMatrix):
        ranks = ranks.ranks
    return _row_stats(ranks)


def consensus_over_features(per_feature_consensus) -> tuple[np.ndarray, np.ndarray]:
    """Second level: average and median over the features' consensus ranks."""
    return _row_stats(per_feature_consensus)


def consensus_over_regions(per_region_consensus) -> np.ndarray:
    """Third level: average over the regions' feature-level consensus."""
    return _row_stats(per_region_consensus)[0]


@dataclass(frozen=True)
class HorizonRanking:
    """Average APE/sAPE rank of each method at each prediction time.

    ``ranks[i, j]`` is NaN where method ``j`` has no prediction at ``ks[i]``;
    those cells are listed in ``excluded``.
    """

    feature_id: str
    ks: np.ndarray
    methods: tuple[str, ...]
    ranks: np.ndarray
    excluded: tuple[tuple[int, str], ...] = ()

    def series(self, method: str) -> np.ndarray:
        return self.ranks[:, self.methods.index(method)]


def horizon_ranking(
    feature_errors: Mapping[str, FeatureErrorSeries] | Sequence[FeatureErrorSeries],
    measures=(MeasureId.APE, MeasureId.sAPE),
    epsilon_policy: str = CORRECTED,
) -> HorizonRanking:
    """Rank methods at every prediction time by APE and sAPE and average the ranks."""
    if not isinstance(feature_errors, Mapping):
        feature_errors = {s.method_id: s for s in feature_errors}
    if not feature_errors:
        raise NoCommonPredictionTimes("no methods")
    methods = tuple(feature_errors)
    by_method = {m: {p.k: p for p in s.points} for m, s in feature_errors.items()}
    common = set.intersection(*(set(d) for d in by_method.values()))
    if not common:
        raise NoCommonPredictionTimes("methods share no prediction time")
    ks = sorted(set().union(*(set(d) for d in by_method.values())))
    feature_ids = {s.feature_id for s in feature_errors.values()}
    measures = [MeasureId.parse(m) for m in measures]
    out = np.full((len(ks), len(methods)), np.nan)
    excluded = []
    for i, k in enumerate(ks):
        present = [j for j, m in enumerate(methods) if k in by_method[m]]
        excluded.extend((k, methods[j]) for j in range(len(methods)) if j not in present)
        per_measure = []
        for measure in measures:
            col = []
            for j in present:
                p = by_method[methods[j]][k]
                if measure is MeasureId.APE:
                    col.append(ape(p.observed, p.predicted, epsilon_policy))
                elif measure is MeasureId.sAPE:
                    col.append(sape(p.observed, p.predicted, epsilon_policy))
                else:
                    raise ValueError(f"horizon ranking takes scalar measures, got {measure}")
            per_measure.append(rank_column(col))
        out[i, present] = np.mean(per_measure, axis=0)
    return HorizonRanking(
        feature_id=feature_ids.pop() if len(feature_ids) == 1 else "",
        ks=np.array(ks, dtype=np.int64),
        methods=methods,
        ranks=out,
        excluded=tuple(excluded),
    )


MAPE_GROUPS = (("G1", 0.5), ("G2", 1.0), ("G3", 2.0), ("G4", float("inf")))


def mape_group(mape: float) -> str:
    """Group of a MAPE value; an exact boundary goes to the lower group."""
    if not mape >= 0:
        raise NegativeMape(f"MAPE must be >= 0, got {mape}")
    for name, upper in MAPE_GROUPS:
        if mape <= upper:
            return name
    raise NegativeMape(f"invalid MAPE {mape}")  # pragma: no cover


def cluster_by_mape(mape_per_method: Mapping[str, float]) -> dict[str, str]:
    """Assign each method to G1 [0, .5], G2 (.5, 1], G3 (1, 2] or G4 (2, inf)."""
    return {m: mape_group(v) for m, v in mape_per_method.items()}


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def box_stats(values) -> BoxStats:
    """Tukey box-plot summary: hinges are medians of the lower and upper halves."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        raise EmptyMatrix("box statistics of an empty sample")
    n = len(v)
    half = n // 2
    lower = v[:half] if n > 1 else v
    upper = v[n - half:] if n > 1 else v
    q1, q3 = float(np.median(lower)), float(np.median(upper))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = tuple(float(x) for x in v[(v < lo_fence) | (v > hi_fence)])
    return BoxStats(float(np.median(v)), q1, q3, float(inside.min()), float(inside.max()), outliers)
