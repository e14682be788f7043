# %% [markdown]
# # Desk-scale run
# Three synthetic regions, six forecasters, every prediction time.
# Reports land in ./demo_report as CSV, JSON and SVG.

# %%
from pathlib import Path

from epieval.features import FeatureConfig
from epieval.harness import graded_methods
from epieval.io import HarnessSpec, RunConfig
from epieval.pipeline import run_pipeline, write_csv, write_json
from epieval.plots import emit_plots

spec = HarnessSpec(n_regions=3, season_length=40, peak_week=18, visits_per_week=100000.0, methods=tuple(graded_methods(6, noise=60.0)))
cfg = RunConfig(harness=spec, feature_config=FeatureConfig(id_threshold=1000.0, season_threshold=1.0))
bundle = run_pipeline(cfg)
print(dict(zip(bundle.methods, [round(v, 2) for v in bundle.region_consensus])))

# %%
out = Path("demo_report")
files = write_csv(bundle, out) + [write_json(bundle, out)] + emit_plots(bundle, out)
print(len(files), "files written")
