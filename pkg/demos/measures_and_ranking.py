# %% [markdown]
# # Error measures and consensus ranking
# Six forecasters of growing amplitude bias are scored on the peak
# value, then ranked by each measure and by their consensus.

# %%
import numpy as np

from epieval.features import FeatureConfig
from epieval.harness import SynthConfig, generate_curve, generate_forecast_family, graded_methods
from epieval.measures import compute_measure
from epieval.pipeline import evaluate_region

truth = generate_curve(SynthConfig(season_length=40, peak_week=16, peak_height=6000.0))
sets = generate_forecast_family(truth, graded_methods(6, noise=80.0, seed=3))

# %% [markdown]
# Series-level measures of a biased curve. sMAPE saturates at 2 and
# MAAPE at pi/2, MAPE does not.

# %%
y = truth.values
for factor in (0.0, 0.5, 2.0, 5.0):
    x = factor * y
    print(factor, [round(compute_measure(m, y, x), 3) for m in ("MAPE", "sMAPE", "MAAPE")])

# %%
report = evaluate_region(truth, sets, FeatureConfig(id_threshold=1500.0), ["peak_value", "peak_time", "speed"])
table = report.features["peak_value"]
print(table.measures)
for method, row, c in zip(table.methods, table.ranks, table.consensus):
    print(method, row, round(c, 2))

# %% [markdown]
# Averaging the per-feature consensus gives one score per method.

# %%
print(dict(zip(report.methods, np.round(report.feature_average, 2).tolist())))
