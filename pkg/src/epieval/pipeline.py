"""End-to-end evaluation: features, error matrices, rankings and reports.

The report objects hold plain Python values so a bundle survives a JSON
round trip unchanged; :func:`write_csv` and :mod:`epieval.plots` only read
those values.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .curves import EpiCurve, ForecastSet, Mode, StochasticSeries
from .exceptions import EpiEvalError
from .features import FeatureConfig, extract_all, season_baseline
from .harness import SynthConfig, generate_curve, generate_forecast_family
from .io import RunConfig, ingest_forecasts, ingest_observed
from .measures import (
    DEFAULT_MEASURES,
    MeasureId,
    aggregate_feature_errors,
    compute_measure,
    feature_error_series,
    one_step_ahead_curve,
)
from .ranking import (
    ErrorMatrix,
    cluster_by_mape,
    consensus_over_features,
    consensus_over_regions,
    horizon_ranking,
    rank_matrix,
)
from .stochastic import measures_vs_point

logger = logging.getLogger(__name__)


def _nan_to_none(values):
    return [None if (v is None or (isinstance(v, float) and math.isnan(v))) else float(v) for v in values]


@dataclass
class FeatureTable:
    feature_id: str
    observed_value: float | None
    methods: list
    measures: list
    errors: list
    ranks: list
    consensus: list
    median: list
    n_points: dict
    horizon_ks: list = field(default_factory=list)
    horizon_ranks: list = field(default_factory=list)


@dataclass
class RegionReport:
    region_id: str
    season_id: str
    observed_weeks: list
    observed_values: list
    observed_features: dict
    methods: list
    features: dict = field(default_factory=dict)
    skipped_features: dict = field(default_factory=dict)
    feature_ids: list = field(default_factory=list)
    feature_consensus: list = field(default_factory=list)
    feature_average: list = field(default_factory=list)
    feature_median: list = field(default_factory=list)
    one_step: dict = field(default_factory=dict)
    one_step_measures: dict = field(default_factory=dict)
    clusters: dict = field(default_factory=dict)
    stochastic: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)


@dataclass
class ReportBundle:
    mode: str
    measures: list
    regions: dict = field(default_factory=dict)
    methods: list = field(default_factory=list)
    region_ids: list = field(default_factory=list)
    region_consensus: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.regions

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False, allow_nan=False)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ReportBundle":
        regions = {}
        for rid, r in d.get("regions", {}).items():
            r = dict(r)
            r["features"] = {fid: FeatureTable(**ft) for fid, ft in r.get("features", {}).items()}
            regions[rid] = RegionReport(**r)
        return cls(
            mode=d["mode"],
            measures=list(d["measures"]),
            regions=regions,
            methods=list(d.get("methods", [])),
            region_ids=list(d.get("region_ids", [])),
            region_consensus=list(d.get("region_consensus", [])),
            failures=dict(d.get("failures", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.from_dict(json.loads(text))


# --- per-region evaluation ---------------------------------------------------


def table_from_matrix(feature_id: str, errors: ErrorMatrix, observed_value=None, ranks=None) -> FeatureTable:
    """Report table for a prebuilt error matrix (ranked here unless ``ranks`` is given)."""
    ranks = rank_matrix(errors) if ranks is None else ranks
    return FeatureTable(
        feature_id=feature_id,
        observed_value=None if observed_value is None else float(observed_value),
        methods=list(errors.methods),
        measures=list(errors.measures),
        errors=errors.cells.tolist(),
        ranks=ranks.ranks.tolist(),
        consensus=ranks.consensus.tolist(),
        median=ranks.median_rank.tolist(),
        n_points={},
    )


def evaluate_region(
    curve: EpiCurve,
    forecasts: Sequence[ForecastSet],
    cfg: FeatureConfig,
    features: Sequence[str],
    measures: Sequence = DEFAULT_MEASURES,
    mode=Mode.FORECASTING,
    stochastic: Sequence[StochasticSeries] = (),
    sample_size: int = 10_000,
    seed: int = 0,
) -> RegionReport:
    """Evaluate every method of one region on the selected features."""
    mode = Mode.parse(mode)
    measures = [MeasureId.parse(m) for m in measures]
    sets = [f.bind(curve) for f in forecasts]
    methods = [f.method_id for f in sets]
    if len(set(methods)) != len(methods):
        raise EpiEvalError(f"region {curve.region_id}: duplicate method ids")
    observed = extract_all(curve, cfg)
    report = RegionReport(
        region_id=curve.region_id,
        season_id=curve.season_id,
        observed_weeks=[int(w) for w in curve.weeks],
        observed_values=[float(v) for v in curve.values],
        observed_features=observed.to_dict(),
        methods=methods,
    )
    for key, why in observed.diagnostics.items():
        report.diagnostics.append(f"observed {key}: {why}")

    for fid in features:
        if not methods:
            break
        if observed.get(fid) is None:
            report.skipped_features[fid] = "feature absent from the observed curve"
            continue
        series = {f.method_id: feature_error_series(f, fid, cfg, mode, observed) for f in sets}
        empty = [m for m, s in series.items() if len(s) == 0]
        if empty:
            report.skipped_features[fid] = f"no computable predictions for {', '.join(empty)}"
            continue
        try:
            rows = {m: aggregate_feature_errors(s, measures=measures) for m, s in series.items()}
            errors = ErrorMatrix.from_rows(rows, measures)
            ranks = rank_matrix(errors)
        except EpiEvalError as exc:
            report.skipped_features[fid] = f"{type(exc).__name__}: {exc}"
            continue
        table = table_from_matrix(fid, errors, float(observed.get(fid)), ranks)
        table.n_points = {m: len(s) for m, s in series.items()}
        try:
            hz = horizon_ranking(series)
        except EpiEvalError as exc:
            report.diagnostics.append(f"{fid} horizon ranking: {exc}")
        else:
            table.horizon_ks = [int(k) for k in hz.ks]
            table.horizon_ranks = [_nan_to_none(row) for row in hz.ranks]
        report.features[fid] = table

    if report.features:
        report.feature_ids = list(report.features)
        matrix = np.column_stack([report.features[f].consensus for f in report.feature_ids])
        avg, med = consensus_over_features(matrix)
        report.feature_consensus = matrix.tolist()
        report.feature_average = avg.tolist()
        report.feature_median = med.tolist()

    mape = {}
    for f in sets:
        try:
            osc = one_step_ahead_curve(f)
        except EpiEvalError as exc:
            report.diagnostics.append(f"{f.method_id} one-step-ahead curve: {exc}")
            continue
        y = curve.values[osc.weeks - curve.first_week]
        report.one_step[f.method_id] = {"weeks": osc.weeks.tolist(), "values": osc.values.tolist()}
        try:
            scores = {m.value: compute_measure(m, y, osc.values) for m in measures}
        except EpiEvalError as exc:
            report.diagnostics.append(f"{f.method_id} one-step-ahead measures: {exc}")
            continue
        report.one_step_measures[f.method_id] = scores
        if MeasureId.MAPE.value in scores:
            mape[f.method_id] = scores[MeasureId.MAPE.value]
        else:
            mape[f.method_id] = compute_measure(MeasureId.MAPE, y, osc.values)
    report.clusters = cluster_by_mape(mape)

    if stochastic:
        report.stochastic = _score_stochastic(curve, stochastic, mode, sample_size, seed)
    return report


def _score_stochastic(curve, series, mode, size, seed) -> dict:
    """Mean over prediction times of each stochastic method's expected errors."""
    per_method: dict = {}
    for s in series:
        weeks = [w for w in s.weeks if curve.first_week <= w <= curve.last_week]
        if s.prediction_time is not None and mode is Mode.FORECASTING:
            weeks = [w for w in weeks if w > s.prediction_time]
        if not weeks:
            continue
        specs = dict(zip(s.weeks, s.specs()))
        y = curve.values[np.array(weeks) - curve.first_week]
        sub = int(np.random.SeedSequence([seed, s.prediction_time or 0]).generate_state(1)[0])
        scores = measures_vs_point([specs[w] for w in weeks], y, size, sub, weeks=weeks)
        per_method.setdefault(s.method_id, []).append(scores.aggregate)
    out = {}
    for method, rows in per_method.items():
        out[method] = {m.value: float(np.mean([r[m] for r in rows])) for m in rows[0]}
    return out


# --- whole run ---------------------------------------------------------------


def load_inputs(cfg: RunConfig):
    """Curves, forecast sets and stochastic series per region for ``cfg``."""
    if cfg.harness is not None:
        return _harness_inputs(cfg)
    curves = ingest_observed(cfg.observed_path)
    items = ingest_forecasts(cfg.forecasts_path)
    seasons = {c.season_id for c in curves}
    season = cfg.season
    if season is None:
        if len(seasons) > 1:
            raise EpiEvalError(f"observed file has several seasons {sorted(seasons)}; set [evaluation] season")
        season = next(iter(seasons), None)
    selected = {c.region_id: c for c in curves if c.season_id == season}
    regions = list(cfg.regions) or list(selected)
    out = {}
    for rid in regions:
        if rid not in selected:
            out[rid] = (None, [], [])
            continue
        sets = [f for f in items if isinstance(f, ForecastSet) and f.region_id == rid]
        sto = [s for s in items if isinstance(s, StochasticSeries) and s.region_id == rid]
        out[rid] = (selected[rid], sets, sto)
    if cfg.season_threshold_source == "baseline":
        baselines = {}
        for rid in out:
            past = [c for c in curves if c.region_id == rid and c.season_id in cfg.baseline_seasons]
            baselines[rid] = past
        return out, baselines
    return out, None


def _harness_inputs(cfg: RunConfig):
    h = cfg.harness
    from .harness import graded_methods

    methods = list(h.methods) or graded_methods(6, seed=h.seed)
    out = {}
    for i in range(h.n_regions):
        rid = f"R{i + 1}"
        if cfg.regions and rid not in cfg.regions:
            continue
        truth = generate_curve(
            SynthConfig(
                season_length=h.season_length,
                peak_week=h.peak_week + (i % 3) - 1 if 1 < h.peak_week + (i % 3) - 1 < h.season_length else h.peak_week,
                peak_height=h.peak_height * (1.0 + 0.1 * i),
                onset_sharpness=h.onset_sharpness,
                noise_stdev=h.noise_stdev,
                seed=h.seed + i,
                visits_per_week=h.visits_per_week,
                population=h.population,
                region_id=rid,
                season_id="synthetic",
            )
        )
        out[rid] = (truth, generate_forecast_family(truth, methods), [])
    return out, None


def _region_feature_config(cfg: RunConfig, baselines, rid) -> FeatureConfig:
    fcfg = cfg.feature_config
    if baselines is None:
        return fcfg
    return FeatureConfig(
        id_threshold=fcfg.id_threshold,
        takeoff_delta_t=fcfg.takeoff_delta_t,
        takeoff_threshold=fcfg.takeoff_threshold,
        season_threshold=season_baseline(baselines[rid]),
    )


def run_pipeline(cfg: RunConfig) -> ReportBundle:
    """Evaluate every configured region and aggregate across regions.

    A failing region is recorded in ``failures`` and does not stop the others.
    """
    inputs, baselines = load_inputs(cfg)
    bundle = ReportBundle(mode=cfg.mode.value, measures=[MeasureId.parse(m).value for m in cfg.measures])

    def work(rid):
        curve, sets, sto = inputs[rid]
        if curve is None:
            raise EpiEvalError(f"no observed curve for region {rid}")
        fcfg = _region_feature_config(cfg, baselines, rid)
        return evaluate_region(curve, sets, fcfg, cfg.features, cfg.measures, cfg.mode, sto, cfg.sample_size, cfg.seed)

    def guarded(rid):
        try:
            return rid, work(rid), None
        except EpiEvalError as exc:
            logger.error("region %s failed: %s", rid, exc)
            return rid, None, f"{type(exc).__name__}: {exc}"

    rids = list(inputs)
    if cfg.workers > 1 and len(rids) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(guarded, rids))
    else:
        results = [guarded(r) for r in rids]
    for rid, report, failure in results:
        if failure is not None:
            bundle.failures[rid] = failure
        else:
            bundle.regions[rid] = report
    _aggregate_regions(bundle)
    return bundle


def _aggregate_regions(bundle: ReportBundle) -> None:
    usable = [r for r in bundle.regions.values() if r.feature_average]
    if not usable:
        return
    methods = [m for m in usable[0].methods if all(m in r.methods for r in usable)]
    cols = []
    for r in usable:
        idx = {m: i for i, m in enumerate(r.methods)}
        cols.append([r.feature_average[idx[m]] for m in methods])
    bundle.methods = methods
    bundle.region_ids = [r.region_id for r in usable]
    bundle.region_consensus = consensus_over_regions(np.array(cols).T).tolist()


# --- writers -----------------------------------------------------------------


def safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", str(text)).strip("-") or "x"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_csv(bundle: ReportBundle, out_dir) -> list[Path]:
    """Write rank, error, consensus, horizon, one-step and cluster tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rid, r in bundle.regions.items():
        base = safe_name(rid)
        for fid, t in r.features.items():
            stem = f"{base}_{safe_name(fid)}"
            written.append(
                _write_rows(
                    out / f"{stem}_errors.csv",
                    ["method", *t.measures],
                    ([m, *row] for m, row in zip(t.methods, t.errors)),
                )
            )
            written.append(
                _write_rows(
                    out / f"{stem}_ranks.csv",
                    ["method", *t.measures, "consensus", "median"],
                    ([m, *row, c, md] for m, row, c, md in zip(t.methods, t.ranks, t.consensus, t.median)),
                )
            )
            if t.horizon_ks:
                written.append(
                    _write_rows(
                        out / f"{stem}_horizon.csv",
                        ["k", *t.methods],
                        ([k, *row] for k, row in zip(t.horizon_ks, t.horizon_ranks)),
                    )
                )
        if r.feature_ids:
            written.append(
                _write_rows(
                    out / f"{base}_feature_consensus.csv",
                    ["method", *r.feature_ids, "average", "median"],
                    (
                        [m, *row, a, md]
                        for m, row, a, md in zip(r.methods, r.feature_consensus, r.feature_average, r.feature_median)
                    ),
                )
            )
        if r.one_step:
            methods = list(r.one_step)
            weeks = r.one_step[methods[0]]["weeks"]
            written.append(
                _write_rows(
                    out / f"{base}_one_step.csv",
                    ["week", "observed", *methods],
                    (
                        [w, r.observed_values[w - r.observed_weeks[0]], *(r.one_step[m]["values"][i] for m in methods)]
                        for i, w in enumerate(weeks)
                    ),
                )
            )
        if r.one_step_measures:
            measures = list(next(iter(r.one_step_measures.values())))
            written.append(
                _write_rows(
                    out / f"{base}_mape_clusters.csv",
                    ["method", *measures, "group"],
                    ([m, *(s[c] for c in measures), r.clusters.get(m, "")] for m, s in r.one_step_measures.items()),
                )
            )
        if r.stochastic:
            measures = list(next(iter(r.stochastic.values())))
            written.append(
                _write_rows(
                    out / f"{base}_stochastic.csv",
                    ["method", *measures],
                    ([m, *(s[c] for c in measures)] for m, s in r.stochastic.items()),
                )
            )
    if bundle.region_consensus:
        written.append(
            _write_rows(
                out / "regions_consensus.csv",
                ["method", *bundle.region_ids, "average"],
                (
                    [
                        m,
                        *(
                            bundle.regions[rid].feature_average[bundle.regions[rid].methods.index(m)]
                            for rid in bundle.region_ids
                        ),
                        avg,
                    ]
                    for m, avg in zip(bundle.methods, bundle.region_consensus)
                ),
            )
        )
    if bundle.failures:
        written.append(_write_rows(out / "failures.csv", ["region", "error"], sorted(bundle.failures.items())))
    return written


def write_json(bundle: ReportBundle, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bundle.json"
    path.write_text(bundle.to_json() + "\n", encoding="utf-8")
    return path
