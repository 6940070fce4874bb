"""Trained classifier wrapper with a uniform predict/serialise interface."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional

import numpy as np

from ..errors import TooFewSamples
from .dataset import Dataset
from .svm import SVM
from .tree import DecisionTree, RandomForest

KINDS = ("rf", "svm", "fusion_tree")
RF_DEFAULTS = {"n_trees": 100, "max_depth": None, "min_leaf": 1, "seed": 0}
SVM_DEFAULTS = {"c": 1.0, "gamma": None}


def check_trainable(data: Dataset, min_per_class: int = 2) -> None:
    """Both classes present with at least ``min_per_class`` rows each."""
    data.check_classes()
    counts = np.bincount(data.y, minlength=2)
    if counts.min() < min_per_class:
        raise TooFewSamples(f"need >= {min_per_class} samples per class, got {counts.tolist()}")


@dataclass
class TrainedModel:
    """A fitted estimator and the feature layout it expects.

    A late-fusion model keeps the r-PPG and thermal models in ``components``
    and, in ``blocks``, the early-fusion columns each one reads. Without
    components a ``fusion_tree`` reads ``(p_rppg, p_thermal)`` directly.
    """

    kind: str
    params: Dict
    estimator: object
    feature_names: List[str]
    mode: str = ""
    oof_proba: Optional[np.ndarray] = None
    components: Dict[str, "TrainedModel"] = field(default_factory=dict)
    blocks: Dict[str, List[int]] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def stack_inputs(self, X) -> np.ndarray:
        """Component probabilities ``(p_rppg, p_thermal)`` for a fusion tree."""
        X = self._check(X)
        return np.column_stack([self.components[m].predict_proba(X[:, self.blocks[m]])
                                for m in ("rppg", "thermal")])

    def predict_proba(self, X) -> np.ndarray:
        """Probability of class 1 for each row."""
        if self.components:
            return self.estimator.predict_proba(self.stack_inputs(X))
        return np.clip(self.estimator.predict_proba(self._check(X)), 0.0, 1.0)

    def decision_function(self, X) -> np.ndarray:
        if self.kind == "svm":
            return self.estimator.decision_function(self._check(X))
        return self.predict_proba(X) - 0.5

    def predict(self, X) -> np.ndarray:
        if self.kind == "svm":
            return (self.decision_function(X) > 0).astype(np.int64)
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    # -- serialisation ---------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": self.params, "mode": self.mode,
               "feature_names": self.feature_names,
               "estimator": self.estimator.to_dict()}
        if self.oof_proba is not None:
            out["oof_proba"] = [float(p) for p in self.oof_proba]
        if self.components:
            out["components"] = {k: v.to_dict() for k, v in self.components.items()}
            out["blocks"] = {k: list(map(int, v)) for k, v in self.blocks.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        kind = data["kind"]
        est_cls = {"rf": RandomForest, "svm": SVM, "fusion_tree": DecisionTree}[kind]
        oof = data.get("oof_proba")
        return cls(kind=kind, params=dict(data["params"]),
                   estimator=est_cls.from_dict(data["estimator"]),
                   feature_names=list(data["feature_names"]), mode=data.get("mode", ""),
                   oof_proba=None if oof is None else np.array(oof, dtype=np.float64),
                   components={k: cls.from_dict(v) for k, v in data.get("components", {}).items()},
                   blocks={k: list(v) for k, v in data.get("blocks", {}).items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _merge(defaults: Mapping, params: Optional[Mapping]) -> dict:
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    return {**defaults, **params}


def train_rf(data: Dataset, params: Optional[Mapping] = None) -> TrainedModel:
    """Fit a random forest; ``params`` keys: n_trees, max_depth, min_leaf, seed.

    Raises
    ------
    SingleClass, TooFewSamples
    """
    p = _merge(RF_DEFAULTS, params)
    check_trainable(data)
    rf = RandomForest(p["n_trees"], p["max_depth"], p["min_leaf"], p["seed"]).fit(data.X, data.y)
    return TrainedModel("rf", p, rf, data.feature_names, data.mode)


def train_svm(data: Dataset, params: Optional[Mapping] = None) -> TrainedModel:
    """Fit a standardised RBF SVM; ``params`` keys: c, gamma (default 1/d).

    Raises
    ------
    SingleClass, TooFewSamples, NoConvergence
    """
    p = _merge(SVM_DEFAULTS, params)
    check_trainable(data)
    if p["gamma"] is None:
        p["gamma"] = 1.0 / data.n_features
    svm = SVM(c=p["c"], gamma=p["gamma"]).fit(data.X, data.y)
    return TrainedModel("svm", p, svm, data.feature_names, data.mode)


def train(kind: str, data: Dataset, params: Optional[Mapping] = None) -> TrainedModel:
    if kind == "rf":
        return train_rf(data, params)
    if kind == "svm":
        return train_svm(data, params)
    raise ValueError(f"model kind must be 'rf' or 'svm', got {kind!r}")

