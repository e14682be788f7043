"""Reading observed curves, forecasts and run configuration files.

Observed file (comma-separated, header row)::

    region,season,week,ili_count[,total_visits][,population]

Forecast file::

    method,region,k,target_week[,value][,replicate_id][,weight][,mean,variance,n_samples]

A row with ``value`` alone is deterministic (target weeks ``<= k`` are the
model's fitted values), ``value`` with ``replicate_id`` is one replicate,
and ``mean``/``variance``/``n_samples`` describe a predictive distribution.
One method must use one kind throughout.
"""
from __future__ import annotations

import configparser
import csv
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .curves import DistSpec, EpiCurve, ForecastRun, ForecastSet, Mode, Replicates, StochasticSeries, validate_curve
from .exceptions import ConfigError, EpiEvalError, MixedForecastKinds, ParseError
from .harness import PerturbConfig
from .features import FEATURE_IDS, TAKEOFF_DELTA_T, TAKEOFF_THRESHOLD, FeatureConfig
from .measures import DEFAULT_MEASURES, MeasureId
from .stochastic import DEFAULT_SAMPLE_SIZE

logger = logging.getLogger(__name__)

OBSERVED_COLUMNS = ("region", "season", "week", "ili_count")
FORECAST_COLUMNS = ("method", "region", "k", "target_week")


def _rows(path, required):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing}", line=1, path=path)
        reader.fieldnames = header
        for row in reader:
            if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
                continue
            yield reader.line_num, {k: (v or "").strip() for k, v in row.items() if k is not None}


def _int(value, name, line, path):
    try:
        f = float(value)
    except ValueError:
        raise ParseError(f"{name} {value!r} is not a number", line=line, path=path) from None
    if not math.isfinite(f) or f != int(f):
        raise ParseError(f"{name} {value!r} is not an integer", line=line, path=path)
    return int(f)


def _float(value, name, line, path):
    try:
        f = float(value)
    except ValueError:
        raise ParseError(f"{name} {value!r} is not a number", line=line, path=path) from None
    if not math.isfinite(f):
        raise ParseError(f"{name} {value!r} is not finite", line=line, path=path)
    return f


def ingest_observed(path) -> list[EpiCurve]:
    """One validated curve per (region, season), in order of first appearance."""
    groups: OrderedDict = OrderedDict()
    for line, row in _rows(path, OBSERVED_COLUMNS):
        key = (row["region"], row["season"])
        g = groups.setdefault(key, {"pairs": [], "visits": [], "population": None, "line": line})
        week = _int(row["week"], "week", line, path)
        g["pairs"].append((week, _float(row["ili_count"], "ili_count", line, path)))
        if row.get("total_visits"):
            g["visits"].append(_float(row["total_visits"], "total_visits", line, path))
        if row.get("population") and g["population"] is None:
            g["population"] = _int(row["population"], "population", line, path)
    if not groups:
        logger.warning("%s contains no observation rows", path)
    curves = []
    for (region, season), g in groups.items():
        visits = g["visits"] or None
        if visits is not None and len(visits) != len(g["pairs"]):
            raise ParseError(f"region {region} season {season}: total_visits given for some weeks only", path=path)
        curves.append(validate_curve(g["pairs"], region, season, visits, g["population"]))
    return curves


def _row_kind(row, line, path) -> str:
    has_value = bool(row.get("value"))
    has_moments = any(row.get(c) for c in ("mean", "variance", "n_samples"))
    if has_value and has_moments:
        raise MixedForecastKinds("row has both a value and distribution moments", line=line, path=path)
    if has_moments:
        if not all(row.get(c) for c in ("mean", "variance", "n_samples")):
            raise ParseError("distribution rows need mean, variance and n_samples", line=line, path=path)
        return "moments"
    if not has_value:
        raise ParseError("row has neither a value nor distribution moments", line=line, path=path)
    return "replicate" if row.get("replicate_id") else "deterministic"


def ingest_forecasts(path, observed: Iterable[EpiCurve] | None = None) -> list[ForecastSet | StochasticSeries]:
    """Deterministic runs become :class:`ForecastSet` (one per method and
    region), replicate and moment rows a :class:`StochasticSeries` per
    method, region and prediction time. With ``observed`` curves given,
    forecast sets are bound to their region's curve and clipped at its end.
    """
    kinds: dict[str, tuple[str, int]] = {}
    det: OrderedDict = OrderedDict()
    sto: OrderedDict = OrderedDict()
    for line, row in _rows(path, FORECAST_COLUMNS):
        method, region = row["method"], row["region"]
        k = _int(row["k"], "k", line, path)
        week = _int(row["target_week"], "target_week", line, path)
        kind = _row_kind(row, line, path)
        first = kinds.setdefault(method, (kind, line))
        if first[0] != kind:
            raise MixedForecastKinds(
                f"method {method!r} mixes {first[0]} rows (line {first[1]}) with {kind} rows",
                line=line,
                path=path,
            )
        if kind == "deterministic":
            run = det.setdefault((method, region), OrderedDict()).setdefault(k, {"pred": {}, "fit": {}})
            bucket = run["pred"] if week > k else run["fit"]
            if week in bucket:
                raise ParseError(f"duplicate row for method {method} k={k} week {week}", line=line, path=path)
            bucket[week] = _float(row["value"], "value", line, path)
        elif kind == "replicate":
            if week <= k:
                continue
            weeks = sto.setdefault((method, region, k), ("replicate", OrderedDict()))[1]
            weight = _float(row["weight"], "weight", line, path) if row.get("weight") else None
            weeks.setdefault(week, []).append((row["replicate_id"], _float(row["value"], "value", line, path), weight))
        else:
            if week <= k:
                continue
            weeks = sto.setdefault((method, region, k), ("moments", OrderedDict()))[1]
            weeks[week] = (
                _float(row["mean"], "mean", line, path),
                _float(row["variance"], "variance", line, path),
                _int(row["n_samples"], "n_samples", line, path),
            )

    targets = {}
    for c in observed or ():
        targets.setdefault(c.region_id, c)
    out: list = []
    for (method, region), runs in det.items():
        built = {}
        for k, parts in runs.items():
            pred = sorted(parts["pred"].items())
            fit = sorted(parts["fit"].items()) or None
            if not pred:
                continue
            built[k] = ForecastRun.from_pairs(method, k, pred, fit)
        fset = ForecastSet(method, built, None, region)
        if region in targets:
            fset = fset.bind(targets[region])
        out.append(fset)
    for (method, region, k), (kind, weeks) in sto.items():
        per_week = {}
        for week, entry in weeks.items():
            if kind == "replicate":
                values = [v for _, v, _ in entry]
                weights = [w for _, _, w in entry]
                if any(w is None for w in weights):
                    weights = None
                per_week[week] = Replicates(np.array(values), None if weights is None else np.array(weights))
            else:
                per_week[week] = DistSpec.from_moments(*entry)
        out.append(StochasticSeries(method, per_week, region, k))
    return out


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class HarnessSpec:
    """Synthetic inputs declared in the ``[harness]`` and ``[method ...]`` sections."""

    n_regions: int = 3
    season_length: int = 52
    peak_week: int = 20
    peak_height: float = 5000.0
    onset_sharpness: float = 0.4
    noise_stdev: float = 0.0
    visits_per_week: float | None = None
    population: int | None = None
    seed: int = 0
    methods: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    observed_path: Path | None = None
    forecasts_path: Path | None = None
    regions: tuple[str, ...] = ()
    season: str | None = None
    features: tuple[str, ...] = FEATURE_IDS
    feature_config: FeatureConfig = field(default_factory=lambda: FeatureConfig(id_threshold=1.0))
    season_threshold_source: str = "fixed"
    baseline_seasons: tuple[str, ...] = ()
    measures: tuple[str, ...] = tuple(m.value for m in DEFAULT_MEASURES)
    mode: Mode = Mode.FORECASTING
    sample_size: int = DEFAULT_SAMPLE_SIZE
    seed: int = 0
    output_dir: Path = Path("report")
    formats: tuple[str, ...] = ("csv", "json", "svg")
    harness: HarnessSpec | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.features:
            raise ConfigError("select at least one feature")
        if not self.measures:
            raise ConfigError("select at least one measure")
        unknown = [f for f in self.features if f not in FEATURE_IDS]
        if unknown:
            raise ConfigError(f"unknown features {unknown}")
        for m in self.measures:
            try:
                MeasureId.parse(m)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        bad = [f for f in self.formats if f not in ("csv", "json", "svg")]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")
        if self.harness is None:
            for p in (self.observed_path, self.forecasts_path):
                if p is None:
                    raise ConfigError("[input] needs observed and forecasts paths (or a [harness] section)")
                if not Path(p).is_file():
                    raise ConfigError(f"input file {p} does not exist")
        if self.season_threshold_source not in ("fixed", "baseline"):
            raise ConfigError("season_threshold must be a number or 'baseline'")
        if self.season_threshold_source == "baseline" and not self.baseline_seasons:
            raise ConfigError("season_threshold = baseline needs baseline_seasons")
        if self.sample_size < 1000:
            raise ConfigError("stochastic sample size must be >= 1000")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _list(value: str | None) -> tuple[str, ...]:
    if value is None:
        return ()
    return tuple(v.strip() for v in value.replace("\n", ",").split(",") if v.strip())


def load_config(path) -> RunConfig:
    """Parse an INI-style ``key = value`` file with section headers.

    Relative paths are resolved against the config file's directory.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    base = path.parent

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    def get(section, key, default=None):
        if parser.has_option(section, key):
            v = parser.get(section, key).strip()
            return v if v != "" else default
        return default

    try:
        season_raw = get("features", "season_threshold")
        source, season_threshold = "fixed", None
        if season_raw is not None and season_raw.lower() == "baseline":
            source = "baseline"
        elif season_raw is not None:
            season_threshold = float(season_raw)
        id_threshold = get("features", "id_threshold")
        if id_threshold is None:
            raise ConfigError("[features] id_threshold is required")
        fcfg = FeatureConfig(
            id_threshold=float(id_threshold),
            takeoff_delta_t=int(get("features", "takeoff_delta_t", TAKEOFF_DELTA_T)),
            takeoff_threshold=float(get("features", "takeoff_threshold", TAKEOFF_THRESHOLD)),
            season_threshold=season_threshold,
        )
        harness = None
        if parser.has_section("harness"):
            methods = []
            for section in parser.sections():
                if not section.lower().startswith("method"):
                    continue
                name = section.split(None, 1)[1].strip() if " " in section else section
                methods.append(
                    PerturbConfig(
                        method_id=name,
                        amplitude_bias=float(get(section, "amplitude_bias", 1.0)),
                        phase_shift=float(get(section, "phase_shift", 0.0)),
                        smoothing_window=int(get(section, "smoothing_window", 1)),
                        noise_stdev=float(get(section, "noise_stdev", 0.0)),
                        seed=int(get(section, "seed", 0)),
                    )
                )
            pop = get("harness", "population")
            visits = get("harness", "visits_per_week")
            harness = HarnessSpec(
                n_regions=int(get("harness", "regions", 3)),
                season_length=int(get("harness", "season_length", 52)),
                peak_week=int(get("harness", "peak_week", 20)),
                peak_height=float(get("harness", "peak_height", 5000.0)),
                onset_sharpness=float(get("harness", "onset_sharpness", 0.4)),
                noise_stdev=float(get("harness", "noise_stdev", 0.0)),
                visits_per_week=None if visits is None else float(visits),
                population=None if pop is None else int(pop),
                seed=int(get("harness", "seed", 0)),
                methods=tuple(methods),
            )
        return RunConfig(
            observed_path=resolve(get("input", "observed")),
            forecasts_path=resolve(get("input", "forecasts")),
            regions=_list(get("evaluation", "regions")),
            season=get("evaluation", "season"),
            features=_list(get("evaluation", "features", ",".join(FEATURE_IDS))),
            feature_config=fcfg,
            season_threshold_source=source,
            baseline_seasons=_list(get("features", "baseline_seasons")),
            measures=_list(get("evaluation", "measures", ",".join(m.value for m in DEFAULT_MEASURES))),
            mode=Mode.parse(get("evaluation", "mode", "forecasting")),
            sample_size=int(get("stochastic", "size", DEFAULT_SAMPLE_SIZE)),
            seed=int(get("stochastic", "seed", 0)),
            output_dir=resolve(get("output", "directory", "report")),
            formats=_list(get("output", "formats", "csv,json,svg")),
            harness=harness,
            workers=int(get("evaluation", "workers", 1)),
        )
    except ConfigError:
        raise
    except (ValueError, EpiEvalError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def write_observed(path, curves: Sequence[EpiCurve]) -> None:
    """Write curves in the observed-file format."""
    with_visits = any(c.total_visits is not None for c in curves)
    with_pop = any(c.population is not None for c in curves)
    header = list(OBSERVED_COLUMNS) + (["total_visits"] if with_visits else []) + (["population"] if with_pop else [])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for c in curves:
            for i, (week, value) in enumerate(c.pairs()):
                row = [c.region_id, c.season_id, week, repr(value)]
                if with_visits:
                    row.append("" if c.total_visits is None else repr(float(c.total_visits[i])))
                if with_pop:
                    row.append("" if c.population is None else c.population)
                w.writerow(row)


def write_forecasts(path, sets: Sequence[ForecastSet]) -> None:
    """Write deterministic forecast sets in the forecast-file format."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(FORECAST_COLUMNS) + ["value"])
        for fs in sets:
            region = fs.region_id or (fs.target.region_id if fs.target is not None else "")
            for k, run in fs.runs.items():
                if run.has_fitted:
                    for week, value in zip(run.fitted_weeks, run.fitted_values):
                        w.writerow([fs.method_id, region, k, int(week), repr(float(value))])
                for week, value in zip(run.weeks, run.values):
                    w.writerow([fs.method_id, region, k, int(week), repr(float(value))])
