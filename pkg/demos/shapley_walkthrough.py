"""
Shapley attributions
====================

Explain a random forest's class-1 probability with exact coalition
enumeration and with permutation sampling, and rank features by mean
absolute attribution.
"""

import numpy as np

from vitalsig import attribution, ml
from vitalsig.synthgen import synth_dataset

ds = synth_dataset(60, 8, 2.5, seed=1)
model = ml.train_rf(ds, {"n_trees": 30, "max_depth": 4})
background = attribution.sample_background(ds, 50, seed=0)

x = ds.X[0]
exact = attribution.shapley_exact(model, x, background)
mc = attribution.shapley_mc(model, x, background, n_permutations=2000, seed=0)
print("exact phi:", np.round(exact.phi, 4))
print("mc phi:   ", np.round(mc.phi, 4))
print(f"efficiency gap {exact.efficiency_gap:.2e}; max |mc - exact| "
      f"{np.max(np.abs(mc.phi - exact.phi)):.4f}")

reports = [attribution.shapley_exact(model, row, background) for row in ds.X[:20]]
for idx, name, val in attribution.rank_features(reports)[:4]:
    flag = "informative" if ds.informative_mask[idx] else ""
    print(f"{name:4s} {val:.4f} {flag}")
