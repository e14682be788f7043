# %% [markdown]
# # Epi-features of a synthetic season
# A logistic bump stands in for a weekly ILI curve. We extract every
# feature and look at how they move when the curve is scaled.

# %%
import numpy as np

from epieval.features import FeatureConfig, extract_all, first_take_off, intensity_duration, peak
from epieval.harness import SynthConfig, generate_curve

curve = generate_curve(SynthConfig(season_length=40, peak_week=18, peak_height=4000.0, visits_per_week=80000.0))
np.round(curve.values[:10], 1)

# %%
cfg = FeatureConfig(id_threshold=1000.0, season_threshold=1.0)
fv = extract_all(curve, cfg)
for name, value in fv.to_dict().items():
    print(f"{name:>16}: {value}")

# %% [markdown]
# Peak and take-off by hand. The take-off is the first week whose
# two-week slope reaches 150 cases/week.

# %%
print(peak(curve))
print(first_take_off(curve, delta_t=2, threshold=150.0))
print(intensity_duration(curve, 1000.0))

# %% [markdown]
# Doubling the counts (and count thresholds) doubles value features and
# leaves week features alone.

# %%
double = extract_all(
    generate_curve(SynthConfig(season_length=40, peak_week=18, peak_height=8000.0, visits_per_week=80000.0)),
    cfg.scaled(2.0),
)
print(fv.get("peak_value"), double.get("peak_value"), fv.get("peak_time"), double.get("peak_time"))
