import json
import logging
from pathlib import Path

import numpy as np
import pytest

from epieval.cli import main
from epieval.features import FEATURE_IDS, FeatureConfig
from epieval.harness import SynthConfig, generate_curve, generate_forecast_family, graded_methods
from epieval.io import HarnessSpec, RunConfig, load_config, write_forecasts, write_observed
from epieval.pipeline import ReportBundle, RegionReport, run_pipeline, table_from_matrix, write_csv, write_json
from epieval.plots import emit_plots
from epieval.ranking import ErrorMatrix

PEAK_ERRORS = {
    "Method 1": [4992.0, 9838.6, 4.9, 1.04, 1.7, 1.03],
    "Method 2": [4825.2, 9770.4, 4.7, 0.99, 1.4, 0.95],
    "Method 3": [3263.0, 5146.5, 3.2, 0.96, 1.5, 1.01],
    "Method 4": [2990.7, 4651.3, 2.9, 0.899, 1.1, 0.85],
    "Method 5": [3523.2, 5334.8, 3.4, 0.95, 2.1, 1.01],
    "Method 6": [3310.9, 4948.5, 3.2, 0.896, 1.5, 0.85],
}
MEASURES = ["MAE", "RMSE", "MAPE", "sMAPE", "MdAPE", "MdsAPE"]


def _harness_cfg(tmp_path, regions=1, visits=True, **kw):
    spec = HarnessSpec(n_regions=regions, season_length=40, peak_week=20, visits_per_week=100000.0 if visits else None)
    fcfg = FeatureConfig(id_threshold=1000.0, season_threshold=1.0 if visits else None)
    return RunConfig(harness=spec, feature_config=fcfg, output_dir=tmp_path / "out", **kw)


def test_identity_method_ranks_first_everywhere(tmp_path):
    bundle = run_pipeline(_harness_cfg(tmp_path, regions=2))
    assert not bundle.failures
    for r in bundle.regions.values():
        assert sorted(r.features) == sorted(FEATURE_IDS)
        for t in r.features.values():
            assert t.ranks[0] == [1] * len(t.measures) and t.consensus[0] == 1.0
            assert all(row[0] == 1.0 for row in t.horizon_ranks)
        assert r.feature_average[0] == 1.0
        assert r.clusters["M1"] == "G1"
    assert bundle.region_consensus[0] == 1.0


def test_json_roundtrip_gives_identical_csv_bytes(tmp_path):
    bundle = run_pipeline(_harness_cfg(tmp_path, regions=2))
    a, b = tmp_path / "a", tmp_path / "b"
    paths = write_csv(bundle, a)
    reloaded = ReportBundle.from_json(write_json(bundle, a).read_text())
    write_csv(reloaded, b)
    assert paths
    for p in paths:
        assert p.read_bytes() == (b / p.name).read_bytes()
    assert reloaded.to_json() == bundle.to_json()


def test_published_peak_errors_emit_rank_csv(tmp_path):
    errors = ErrorMatrix.from_rows({m: dict(zip(MEASURES, row)) for m, row in PEAK_ERRORS.items()}, MEASURES)
    table = table_from_matrix("peak_value", errors)
    region = RegionReport("Region1", "2013-14", [1, 2], [0.0, 0.0], {}, list(PEAK_ERRORS), features={"peak_value": table})
    bundle = ReportBundle("forecasting", MEASURES, regions={"Region1": region})
    (path,) = [p for p in write_csv(bundle, tmp_path) if p.name.endswith("_ranks.csv")]
    lines = path.read_text().splitlines()
    assert lines[0] == "method,MAE,RMSE,MAPE,sMAPE,MdAPE,MdsAPE,consensus,median"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[5] for r in rows] == ["5", "2", "3", "1", "6", "3"]
    assert [r[6] for r in rows] == ["6", "3", "4", "1", "4", "1"]
    assert [r[1] for r in rows] == ["6", "5", "2", "1", "4", "3"]
    assert [r[2] for r in rows] == ["6", "5", "3", "1", "4", "2"]
    assert [r[4] for r in rows] == ["6", "5", "4", "2", "3", "1"]


def test_plot_files_for_one_region(tmp_path):
    bundle = run_pipeline(_harness_cfg(tmp_path, regions=1))
    files = emit_plots(bundle, tmp_path / "svg")
    names = sorted(p.name for p in files)
    assert len(files) == 17
    assert sum(n.endswith("_box.svg") for n in names) == 8
    assert sum(n.endswith("_horizon.svg") for n in names) == 8
    assert names.count("R1_one_step.svg") == 1
    first = {p.name: p.read_bytes() for p in files}
    again = emit_plots(bundle, tmp_path / "svg")
    assert {p.name: p.read_bytes() for p in again} == first
    assert all(b.startswith(b"<?xml") and b.rstrip().endswith(b"</svg>") for b in first.values())


def test_overall_box_with_several_regions(tmp_path):
    bundle = run_pipeline(_harness_cfg(tmp_path, regions=3))
    names = {p.name for p in emit_plots(bundle, tmp_path / "svg")}
    assert "overall_box.svg" in names and len(names) == 3 * 17 + 1


def test_empty_bundle_writes_nothing(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert emit_plots(ReportBundle("forecasting", MEASURES), tmp_path / "svg") == []
    assert not (tmp_path / "svg").exists() and "empty" in caplog.text


def test_pipeline_is_deterministic(tmp_path):
    cfg = _harness_cfg(tmp_path, regions=3)
    assert run_pipeline(cfg).to_json() == run_pipeline(cfg).to_json()
    assert run_pipeline(cfg.with_overrides(workers=3)).to_json() == run_pipeline(cfg).to_json()


def _file_inputs(tmp_path):
    curves, sets = [], []
    for i, rid in enumerate(("R1", "R2")):
        truth = generate_curve(SynthConfig(season_length=26, peak_week=11 + i, region_id=rid, season_id="2013"))
        curves.append(truth)
        sets += generate_forecast_family(truth, graded_methods(4, noise=20.0, seed=i))
    write_observed(tmp_path / "obs.csv", curves)
    write_forecasts(tmp_path / "fc.csv", sets)


def _ini(tmp_path, extra=""):
    p = tmp_path / "run.ini"
    p.write_text(
        "[input]\nobserved = obs.csv\nforecasts = fc.csv\n"
        "[features]\nid_threshold = 1000\n"
        "[evaluation]\nfeatures = peak_value, peak_time, speed\n" + extra
    )
    return p


def test_cli_success(tmp_path):
    _file_inputs(tmp_path)
    out = tmp_path / "report"
    assert main(["--config", str(_ini(tmp_path)), "--out", str(out), "--format", "csv,json"]) == 0
    assert (out / "regions_consensus.csv").is_file() and (out / "bundle.json").is_file()
    assert not list(out.glob("*.svg"))
    data = json.loads((out / "bundle.json").read_text())
    assert data["region_ids"] == ["R1", "R2"] and data["methods"][0] == "M1"
    assert data["region_consensus"][0] == 1.0


def test_cli_region_filter_and_mode(tmp_path):
    _file_inputs(tmp_path)
    out = tmp_path / "report"
    rc = main(["--config", str(_ini(tmp_path)), "--out", str(out), "--region", "R2", "--mode", "calibration", "--seed", "5"])
    assert rc == 0
    data = json.loads((out / "bundle.json").read_text())
    assert list(data["regions"]) == ["R2"] and data["mode"] == "calibration"
    assert (out / "R2_peak_value_box.svg").is_file()


def test_cli_partial_failure_exits_one(tmp_path):
    _file_inputs(tmp_path)
    out = tmp_path / "report"
    rc = main(["--config", str(_ini(tmp_path, "regions = R1, R9\n")), "--out", str(out), "--format", "csv"])
    assert rc == 1
    assert "R9" in (out / "failures.csv").read_text()
    assert (out / "R1_feature_consensus.csv").is_file()


def test_cli_config_errors_exit_two(tmp_path, capsys):
    _file_inputs(tmp_path)
    bad = _ini(tmp_path, "measures = \n")
    bad.write_text(bad.read_text().replace("measures = \n", "measures = nonsense\n"))
    assert main(["--config", str(bad)]) == 2
    assert main(["--config", str(tmp_path / "missing.ini")]) == 2
    (tmp_path / "fc.csv").write_text("method,region,k,target_week,value\nA,R1,two,3,4\n")
    assert main(["--config", str(_ini(tmp_path))]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_rejects_bad_arguments(tmp_path):
    with pytest.raises(SystemExit):
        main(["--config", "x.ini", "--format", "pdf"])
    with pytest.raises(SystemExit):
        main(["--config", "x.ini", "--seed", "-4"])


def test_harness_ini_runs_through_cli(tmp_path):
    p = tmp_path / "h.ini"
    p.write_text(
        "[harness]\nregions = 2\nseason_length = 30\npeak_week = 12\n"
        "[method exact]\n[method late]\nphase_shift = 2\n[method high]\namplitude_bias = 1.4\n"
        "[features]\nid_threshold = 800\n[output]\ndirectory = rep\nformats = csv\n"
    )
    assert main(["--config", str(p)]) == 0
    lines = (tmp_path / "rep" / "regions_consensus.csv").read_text().splitlines()
    assert lines[1].startswith("exact,1.0,1.0,1.0")
    cfg = load_config(p)
    assert cfg.output_dir == tmp_path / "rep"


def test_stochastic_forecasts_are_scored(tmp_path):
    _file_inputs(tmp_path)
    rows = ["method,region,k,target_week,mean,variance,n_samples"]
    y = generate_curve(SynthConfig(season_length=26, peak_week=11, region_id="R1")).values
    for k in (5, 8):
        for w in range(k + 1, 27):
            rows.append(f"S,R1,{k},{w},{y[w - 1]},{(0.1 * y[w - 1]) ** 2},100")
    (tmp_path / "sto.csv").write_text("\n".join(rows) + "\n")
    det = (tmp_path / "fc.csv").read_text().splitlines()
    header = "method,region,k,target_week,value,mean,variance,n_samples"
    merged = [header] + [line + ",,," for line in det[1:]] + [
        ",".join(r.split(",")[:4] + [""] + r.split(",")[4:]) for r in rows[1:]
    ]
    (tmp_path / "fc.csv").write_text("\n".join(merged) + "\n")
    cfg = load_config(_ini(tmp_path, "regions = R1\n[stochastic]\nsize = 1000\nseed = 3\n"))
    bundle = run_pipeline(cfg)
    sto = bundle.regions["R1"].stochastic["S"]
    assert set(sto) == set(MEASURES)
    # spread sigma/sqrt(n) = 1% of y, so E|e|/y = 0.01 * sqrt(2/pi)
    assert sto["MAPE"] == pytest.approx(0.01 * np.sqrt(2 / np.pi), rel=0.05)
    assert "S" not in bundle.regions["R1"].methods
    paths = write_csv(bundle, tmp_path / "out")
    assert any(p.name == "R1_stochastic.csv" for p in paths)
