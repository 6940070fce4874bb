"""
Classifiers, fusion and cross-validation
========================================

Random forest and SVM on a synthetic two-block dataset, evaluated with
session-grouped stratified folds, then early fusion (concatenated
features) against late fusion (a shallow tree over per-modality
out-of-fold probabilities).
"""

from vitalsig import ml
from vitalsig.synthgen import synth_dataset

# one informative column in each block
ds = ml.split_blocks(synth_dataset(120, 29, 2.0, seed=0, informative=[0, 7]))
print("rows", len(ds.y), " blocks", list(ds.blocks))

grid = {"n_trees": [60], "max_depth": [3, 5]}
reports = {}
for block in ("rppg", "thermal"):
    rep, model = ml.grid_search_cv(ds.select(block), "rf", grid, k=5, seed=0)
    reports[block] = (rep, model)
    print(f"{block:8s} RF accuracy {rep.avg_accuracy:.3f}  F1 {rep.avg_f1:.3f}")

early, _ = ml.grid_search_cv(ds, "rf", grid, k=5, seed=0)
print(f"early    RF accuracy {early.avg_accuracy:.3f}  F1 {early.avg_f1:.3f}")

_, late = ml.late_fuse(reports["rppg"][1], reports["thermal"][1], ds, seed=0, k=5)
print(f"late     tree accuracy {late.avg_accuracy:.3f}  F1 {late.avg_f1:.3f}")

svm_rep, _ = ml.grid_search_cv(ds, "svm", {"c": [1.0, 10.0]}, k=5, seed=0)
print(f"early    SVM accuracy {svm_rep.avg_accuracy:.3f}")
