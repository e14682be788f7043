# %% [markdown]
# # Scoring distributional forecasts
# Closed-form distances between Normals, and Monte-Carlo expected
# errors against a folded-normal reference.

# %%
import math

from epieval.curves import DistSpec
from epieval.measures import MeasureId
from epieval.stochastic import measures_vs_point, pdf_distance

p, q = DistSpec.normal(0, 1), DistSpec.normal(2, 1)
print(pdf_distance("bhattacharyya", p, q), pdf_distance("hellinger", p, q))

# %% [markdown]
# Distances ignore scale: the same shapes 1000 cases higher give
# the same Hellinger distance, while MAPE shrinks.

# %%
print(pdf_distance("hellinger", DistSpec.normal(100, 10), DistSpec.normal(110, 5)))
print(pdf_distance("hellinger", DistSpec.normal(1100, 10), DistSpec.normal(1110, 5)))

# %%
y = [100.0, 200.0, 300.0]
pred = [DistSpec.normal(v + 10, 20) for v in y]
s = measures_vs_point(pred, y, size=5000, seed=1)
mu, sigma = 10.0, 20.0
want = sigma * math.sqrt(2 / math.pi) * math.exp(-mu * mu / (2 * sigma * sigma)) + mu * math.erf(mu / (sigma * math.sqrt(2)))
print(s.aggregate[MeasureId.MAE], "+/-", s.stderr[MeasureId.MAE], "expected", want)
