"""Binary CART classification tree with Gini splits."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Optional

import numpy as np


def gini_impurity(labels: Iterable) -> float:
    """``1 - sum_c p_c**2`` over the class proportions of ``labels``."""
    counts = np.array(list(Counter(np.asarray(list(labels)).tolist()).values()), dtype=float)
    if counts.sum() == 0:
        raise ValueError("gini impurity of an empty set")
    p = counts / counts.sum()
    return float(1.0 - np.sum(p * p))


def _binary_gini(p):
    return 2.0 * p * (1.0 - p)


class DecisionTree:
    """Gini tree for labels in {0, 1}; leaves store the fraction of class 1.

    Parameters
    ----------
    max_depth : int or None
        ``None`` grows until leaves are pure or no split is allowed;
        ``0`` gives a single leaf.
    min_leaf : int
        Minimum samples on each side of a split.
    max_features : int or None
        Features examined per node, drawn without replacement from ``rng``;
        ``None`` examines all features in index order.
    """

    def __init__(self, max_depth: Optional[int] = None, min_leaf: int = 1,
                 max_features: Optional[int] = None, rng: Optional[np.random.Generator] = None):
        self.max_depth = max_depth
        self.min_leaf = max(int(min_leaf), 1)
        self.max_features = max_features
        self.rng = rng

    def _split(self, X, y, idx, n_features):
        n = len(idx)
        yi = y[idx]
        pos = yi.sum()
        parent = _binary_gini(pos / n)
        if self.max_features is None or self.max_features >= n_features:
            candidates = range(n_features)
        else:
            candidates = self.rng.choice(n_features, self.max_features, replace=False)
        nl = np.arange(1, n)
        nr = n - nl
        size_ok = (nl >= self.min_leaf) & (nr >= self.min_leaf)
        best_gain, best_f, best_thr = 0.0, -1, 0.0
        for f in candidates:
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            cum = np.cumsum(yi[order])[:-1]
            ok = size_ok & (xs[1:] > xs[:-1])
            if not ok.any():
                continue
            child = (nl * _binary_gini(cum / nl) + nr * _binary_gini((pos - cum) / nr)) / n
            gain = np.where(ok, parent - child, -np.inf)
            j = int(np.argmax(gain))
            if gain[j] > best_gain + 1e-12:
                best_gain, best_f = float(gain[j]), int(f)
                best_thr = 0.5 * (xs[j] + xs[j + 1])
        return best_f, best_thr

    def fit(self, X, y, sample_index=None) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        idx0 = np.arange(len(y)) if sample_index is None else np.asarray(sample_index)
        d = X.shape[1]
        feature, threshold, left, right, value, count = [], [], [], [], [], []

        def new_node(idx):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(y[idx].mean()))
            count.append(len(idx))
            return len(feature) - 1

        stack = [(new_node(idx0), idx0, 0)]
        while stack:
            node, idx, depth = stack.pop()
            v = value[node]
            if v in (0.0, 1.0) or len(idx) < 2 * self.min_leaf:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            f, thr = self._split(X, y, idx, d)
            if f < 0:
                continue
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value)
        self.count_ = np.array(count, dtype=np.int64)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.feature_)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        rows = np.arange(len(X))
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature_[node]
            internal = f >= 0
            if not internal.any():
                return node
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold_[node]
            nxt = np.where(go_left, self.left_[node], self.right_[node])
            node = np.where(internal, nxt, node)

    def predict_proba(self, X) -> np.ndarray:
        return self.value_[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "count": self.count_.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        t = cls()
        t.feature_ = np.array(data["feature"], dtype=np.int64)
        t.threshold_ = np.array(data["threshold"], dtype=np.float64)
        t.left_ = np.array(data["left"], dtype=np.int64)
        t.right_ = np.array(data["right"], dtype=np.int64)
        t.value_ = np.array(data["value"], dtype=np.float64)
        t.count_ = np.array(data.get("count", [0] * len(t.feature_)), dtype=np.int64)
        return t


class RandomForest:
    """Bagged Gini trees examining ``floor(sqrt(d))`` random features per node."""

    def __init__(self, n_trees: int = 100, max_depth: Optional[int] = None,
                 min_leaf: int = 1, seed: int = 0, max_features: Optional[int] = None):
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_leaf = int(min_leaf)
        self.seed = int(seed)
        self.max_features = max_features

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        k = self.max_features or max(1, int(np.sqrt(d)))
        rng = np.random.default_rng(self.seed)
        self.trees_ = []
        for _ in range(self.n_trees):
            boot = rng.integers(0, n, n)
            tree = DecisionTree(self.max_depth, self.min_leaf, k, rng)
            self.trees_.append(tree.fit(X, y, boot))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros(len(X))
        for t in self.trees_:
            acc += t.predict_proba(X)
        return acc / len(self.trees_)

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "min_leaf": self.min_leaf, "seed": self.seed,
                "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForest":
        rf = cls(data["n_trees"], data["max_depth"], data["min_leaf"], data["seed"])
        rf.trees_ = [DecisionTree.from_dict(t) for t in data["trees"]]
        return rf
