"""Shapley-value attributions of a model's class-1 probability.

Both estimators use the interventional value function: for a coalition
``S`` the instance supplies the features in ``S``, each background row
supplies the rest, and the model output is averaged over the background.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import EmptyBackground, TooManyFeatures

MAX_EXACT_FEATURES = 15
MIN_PERMUTATIONS = 100
BACKGROUND_SIZE = 50
TOP_K = 10
_BATCH_ROWS = 200_000


@dataclass
class AttributionReport:
    phi: np.ndarray
    base_value: float
    output: float
    instance: np.ndarray
    estimator: str
    feature_names: List[str] = field(default_factory=list)
    n_permutations: Optional[int] = None
    instance_id: str = ""

    @property
    def efficiency_gap(self) -> float:
        """``sum(phi) + base_value - output``."""
        return float(np.sum(self.phi) + self.base_value - self.output)

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "estimator": self.estimator,
                "n_permutations": self.n_permutations, "base_value": self.base_value,
                "output": self.output,
                "phi": {n: float(p) for n, p in zip(self.feature_names, self.phi)}}


def _as_function(model) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(model, "predict_proba"):
        return model.predict_proba
    if callable(model):
        return model
    raise TypeError("model must expose predict_proba or be callable")


def _prepare(model, instance, background, max_features=None):
    f = _as_function(model)
    x = np.asarray(instance, dtype=np.float64).ravel()
    bg = np.asarray(getattr(background, "X", background), dtype=np.float64)
    if bg.size == 0:
        raise EmptyBackground("background has no rows")
    bg = np.atleast_2d(bg)
    if bg.shape[1] != len(x):
        raise ValueError("background and instance differ in width")
    if max_features is not None and len(x) > max_features:
        raise TooManyFeatures(f"exact enumeration supports <= {max_features} features, "
                              f"got {len(x)}")
    return f, x, bg


def _names(model, d):
    names = getattr(model, "feature_names", None)
    return list(names) if names is not None and len(names) == d else [f"f{i}" for i in range(d)]


def coalition_values(model, instance, background, masks: np.ndarray) -> np.ndarray:
    """``v(S)`` for each boolean row of ``masks``."""
    f, x, bg = _prepare(model, instance, background)
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    nb = len(bg)
    per_batch = max(1, _BATCH_ROWS // nb)
    out = np.empty(len(masks))
    for start in range(0, len(masks), per_batch):
        m = masks[start:start + per_batch]
        hybrid = np.where(m[:, None, :], x[None, None, :], bg[None, :, :])
        out[start:start + len(m)] = f(hybrid.reshape(-1, len(x))).reshape(len(m), nb).mean(axis=1)
    return out


def shapley_exact(model, instance, background) -> AttributionReport:
    """Exact Shapley values by enumerating all ``2**d`` coalitions.

    Raises
    ------
    TooManyFeatures
        More than 15 features.
    EmptyBackground
    """
    f, x, bg = _prepare(model, instance, background, MAX_EXACT_FEATURES)
    d = len(x)
    codes = np.arange(2 ** d)
    bits = ((codes[:, None] >> np.arange(d)[None, :]) & 1).astype(bool)
    v = coalition_values(f, x, bg, bits)
    size = bits.sum(axis=1)
    weight = np.array([factorial(s) * factorial(d - s - 1) / factorial(d) for s in range(d)])
    phi = np.empty(d)
    for i in range(d):
        without = ~bits[:, i]
        s = codes[without]
        phi[i] = np.sum(weight[size[without]] * (v[s | (1 << i)] - v[s]))
    return AttributionReport(phi=phi, base_value=float(v[0]), output=float(v[-1]),
                             instance=x, estimator="exact", feature_names=_names(model, d))


def shapley_mc(model, instance, background, n_permutations: int = 2000,
               seed: int = 0) -> AttributionReport:
    """Permutation-sampling Shapley estimate.

    Each permutation is paired with one background row (cycling through
    the background in order) and the instance's features are switched in
    one at a time; each switch's change in output is credited to that
    feature.

    Raises
    ------
    ValueError
        ``n_permutations`` below 100.
    EmptyBackground
    """
    if n_permutations < MIN_PERMUTATIONS:
        raise ValueError(f"n_permutations must be >= {MIN_PERMUTATIONS}")
    f, x, bg = _prepare(model, instance, background)
    d = len(x)
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((n_permutations, d)), axis=1)
    rows = bg[np.arange(n_permutations) % len(bg)]

    # switched[p, k, j]: feature j already taken from the instance after k steps
    rank = np.empty_like(perms)
    np.put_along_axis(rank, perms, np.arange(d)[None, :], axis=1)
    steps = np.arange(d + 1)[None, :, None]
    switched = rank[:, None, :] < steps
    per_batch = max(1, _BATCH_ROWS // (d + 1))
    phi = np.zeros(d)
    for start in range(0, n_permutations, per_batch):
        sl = slice(start, start + per_batch)
        z = np.where(switched[sl], x[None, None, :], rows[sl][:, None, :])
        out = f(z.reshape(-1, d)).reshape(-1, d + 1)
        gains = np.diff(out, axis=1)
        np.add.at(phi, perms[sl].ravel(), gains.ravel())
    phi /= n_permutations
    base_value = float(np.mean(f(bg)))
    return AttributionReport(phi=phi, base_value=base_value, output=float(f(x[None, :])[0]),
                             instance=x, estimator="mc", feature_names=_names(model, d),
                             n_permutations=int(n_permutations))


def rank_features(reports: Sequence[AttributionReport]):
    """Features by mean ``|phi|`` across reports, descending.

    Returns a list of ``(feature_index, feature_name, mean_abs_phi)``; ties
    keep the lower index first.
    """
    if not reports:
        raise ValueError("rank_features needs at least one report")
    phis = np.vstack([np.abs(r.phi) for r in reports])
    mean = phis.mean(axis=0)
    names = reports[0].feature_names or [f"f{i}" for i in range(len(mean))]
    order = np.lexsort((np.arange(len(mean)), -mean))
    return [(int(i), names[i], float(mean[i])) for i in order]


def sample_background(data, n: int = BACKGROUND_SIZE, seed: int = 0) -> np.ndarray:
    """Up to ``n`` rows drawn without replacement, kept in original order."""
    X = np.asarray(getattr(data, "X", data), dtype=np.float64)
    if len(X) == 0:
        raise EmptyBackground("no rows to sample a background from")
    if len(X) <= n:
        return X.copy()
    idx = np.sort(np.random.default_rng(seed).choice(len(X), n, replace=False))
    return X[idx]


def explain_dataset(model, data, n_permutations: int = 2000, seed: int = 0,
                    background_size: int = BACKGROUND_SIZE,
                    exact: bool = False) -> List[AttributionReport]:
    """Attribute every row of ``data`` against a background drawn from it."""
    bg = sample_background(data, background_size, seed)
    reports = []
    for i, x in enumerate(data.X):
        if exact:
            rep = shapley_exact(model, x, bg)
        else:
            rep = shapley_mc(model, x, bg, n_permutations, seed=[seed, i])
        rep.feature_names = list(data.feature_names)
        rep.instance_id = f"{data.session_ids[i]}#{i}"
        reports.append(rep)
    return reports


def ranking_table(reports: Sequence[AttributionReport], top_k: int = TOP_K) -> List[dict]:
    """Ranking rows ``{rank, feature, mean_abs_phi, top}``."""
    return [{"rank": r + 1, "feature": name, "mean_abs_phi": val, "top": r < top_k}
            for r, (_, name, val) in enumerate(rank_features(reports))]
