"""Late fusion: a shallow Gini tree over per-modality probabilities."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from ..errors import MissingOutOfFold
from .cv import EvalReport, cross_validate, stratified_group_folds
from .dataset import Dataset
from .model import TrainedModel, check_trainable
from .tree import DecisionTree

FUSION_DEPTHS = (1, 2, 3)
STACK_FEATURES = ["p_rppg", "p_thermal"]


def _fit_tree(data: Dataset, depth: int) -> TrainedModel:
    tree = DecisionTree(max_depth=depth).fit(data.X, data.y)
    return TrainedModel("fusion_tree", {"max_depth": depth}, tree, data.feature_names, "late_fusion")


def stacked_dataset(rppg_model: TrainedModel, thermal_model: TrainedModel,
                    data: Dataset) -> Dataset:
    """Two-column table of out-of-fold probabilities ``(p_rppg, p_thermal)``."""
    cols = []
    for name, m in (("rppg", rppg_model), ("thermal", thermal_model)):
        oof = m.oof_proba
        if oof is None:
            raise MissingOutOfFold(f"{name} model has no out-of-fold probabilities")
        oof = np.asarray(oof, dtype=np.float64)
        if len(oof) != len(data) or not np.all(np.isfinite(oof)):
            raise MissingOutOfFold(f"{name} out-of-fold probabilities do not cover the dataset")
        cols.append(oof)
    return Dataset(np.column_stack(cols), data.y, data.session_ids, STACK_FEATURES,
                   mode="late_fusion")


def late_fuse(rppg_model: TrainedModel, thermal_model: TrainedModel, data: Dataset,
              seed: int = 0, k: int = 5,
              depths: Sequence[int] = FUSION_DEPTHS) -> Tuple[TrainedModel, EvalReport]:
    """Fuse two unimodal models with a depth-limited tree.

    ``data`` supplies the labels, sessions and the early-fusion column
    layout; its ``blocks`` tell the fused model which columns feed which
    component at prediction time. The tree depth is chosen from ``depths``
    by the same grouped stratified CV used for the unimodal models.

    Raises
    ------
    MissingOutOfFold
        Either model lacks out-of-fold probabilities for ``data``.
    """
    stacked = stacked_dataset(rppg_model, thermal_model, data)
    check_trainable(stacked)
    folds = stratified_group_folds(stacked.y, stacked.session_ids, k, seed)
    best, best_report, scores = None, None, []
    for depth in depths:
        if depth > 3:
            raise ValueError("fusion tree depth is limited to 3")
        rep = cross_validate(stacked, lambda d, dep=depth: _fit_tree(d, dep), folds)
        scores.append(({"max_depth": depth}, rep.avg_accuracy))
        if best_report is None or rep.avg_accuracy > best_report.avg_accuracy:
            best, best_report = depth, rep
    best_report.params = {"max_depth": best}
    best_report.grid_scores = scores

    fused = _fit_tree(stacked, best)
    fused.feature_names = list(data.feature_names)
    fused.components = {"rppg": rppg_model, "thermal": thermal_model}
    fused.blocks = {m: list(data.blocks.get(m, [])) for m in ("rppg", "thermal")}
    fused.oof_proba = best_report.oof_proba
    return fused, best_report
