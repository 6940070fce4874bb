"""Session-grouped stratified cross-validation and grid search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import TooFewSamples
from .dataset import Dataset
from .model import TrainedModel, check_trainable, train


def default_grid(kind: str, n_features: int) -> Dict[str, list]:
    if kind == "rf":
        return {"n_trees": [100, 300], "max_depth": [3, 5, None], "min_leaf": [1, 3]}
    if kind == "svm":
        return {"c": [0.1, 1.0, 10.0, 100.0],
                "gamma": [g / n_features for g in (0.01, 0.1, 1.0)]}
    raise ValueError(f"no default grid for {kind!r}")


def expand_grid(grid: Mapping[str, Sequence]) -> List[dict]:
    """Cartesian product in key order, last key varying fastest."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def stratified_group_folds(y, groups, k: int = 5, seed: int = 0) -> np.ndarray:
    """Fold index per row; rows sharing a group always share a fold.

    Groups are shuffled with ``seed``, bucketed by their label composition
    and dealt round-robin so every fold receives a similar class mix.

    Raises
    ------
    TooFewSamples
        ``k`` exceeds the smaller class count or the number of groups.
    """
    y = np.asarray(y)
    groups = np.asarray(groups).astype(str)
    counts = np.bincount(y, minlength=2)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > counts.min():
        raise TooFewSamples(f"{k} folds need >= {k} samples per class, got {counts.tolist()}")
    uniq, inverse = np.unique(groups, return_inverse=True)
    if k > len(uniq):
        raise TooFewSamples(f"{k} folds need >= {k} sessions, got {len(uniq)}")
    pos = np.bincount(inverse, weights=y, minlength=len(uniq)).astype(np.int64)
    size = np.bincount(inverse, minlength=len(uniq))
    order = np.random.default_rng(seed).permutation(len(uniq))
    order = order[np.lexsort((size[order] - pos[order], pos[order]))]
    group_fold = np.empty(len(uniq), dtype=np.int64)
    group_fold[order] = np.arange(len(uniq)) % k
    return group_fold[inverse]


def f1_positive(y_true, y_pred) -> float:
    """F1 of class 1; defined as 1.0 when class 1 is neither present nor predicted."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else 2.0 * tp / denom


@dataclass
class EvalReport:
    avg_accuracy: float
    avg_f1: float
    fold_accuracy: List[float]
    fold_f1: List[float]
    params: Dict = field(default_factory=dict)
    grid_scores: List[Tuple[Dict, float]] = field(default_factory=list)
    oof_proba: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {"avg_accuracy": self.avg_accuracy, "avg_f1": self.avg_f1,
                "fold_accuracy": self.fold_accuracy, "fold_f1": self.fold_f1,
                "params": self.params,
                "grid_scores": [{"params": p, "avg_accuracy": s} for p, s in self.grid_scores]}


def cross_validate(data: Dataset, fit, folds: np.ndarray) -> EvalReport:
    """Evaluate ``fit(train_data) -> TrainedModel`` on precomputed folds."""
    acc, f1 = [], []
    oof = np.full(len(data), np.nan)
    for f in np.unique(folds):
        test = folds == f
        model = fit(data.subset(~test))
        Xt = data.X[test]
        pred = model.predict(Xt)
        oof[test] = model.predict_proba(Xt)
        acc.append(float(np.mean(pred == data.y[test])))
        f1.append(f1_positive(data.y[test], pred))
    return EvalReport(avg_accuracy=float(np.mean(acc)), avg_f1=float(np.mean(f1)),
                      fold_accuracy=acc, fold_f1=f1, oof_proba=oof)


def grid_search_cv(data: Dataset, kind: str, grid: Optional[Mapping[str, Sequence]] = None,
                   k: int = 5, seed: int = 0) -> Tuple[EvalReport, TrainedModel]:
    """Pick the grid point with the best mean fold accuracy and refit on all rows.

    Ties go to the earliest grid point. Random forests receive ``seed``
    unless the grid sets one. The returned model carries the winning
    point's out-of-fold probabilities.

    Raises
    ------
    SingleClass, TooFewSamples
    """
    check_trainable(data)
    folds = stratified_group_folds(data.y, data.session_ids, k, seed)
    points = expand_grid(grid if grid is not None else default_grid(kind, data.n_features))
    if not points:
        raise ValueError("empty grid")

    best, best_report, scores = None, None, []
    for point in points:
        params = dict(point)
        if kind == "rf":
            params.setdefault("seed", seed)
        rep = cross_validate(data, lambda d, p=params: train(kind, d, p), folds)
        scores.append((params, rep.avg_accuracy))
        if best_report is None or rep.avg_accuracy > best_report.avg_accuracy:
            best, best_report = params, rep
    best_report.params = best
    best_report.grid_scores = scores
    model = train(kind, data, best)
    model.oof_proba = best_report.oof_proba
    return best_report, model
