"""Soft-margin RBF support vector machine trained with SMO.

The dual is solved with second-order working-set selection (Fan, Chen &
Lin 2005) and stops when the maximal KKT violation drops below ``tol``.
Probabilities come from a Platt sigmoid fitted to the training decision
values.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..errors import NoConvergence

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 100_000):
    """Solve ``min 1/2 a'Qa - e'a`` s.t. ``y'a = 0, 0 <= a <= C``.

    ``Q[i, j] = y_i y_j K[i, j]`` and ``y`` is in {-1, +1}. Returns
    ``(alpha, rho, n_iter)`` with decision value ``sum a_i y_i K(x_i, x) - rho``.
    """
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    G = -np.ones(n)
    Kdiag = np.diag(K).copy()
    for it in range(max_iter):
        pos = y > 0
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        score = -y * G
        if not up.any() or not low.any():
            break
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        m = s_up[i]
        M = np.min(np.where(low, score, np.inf))
        if m - M < tol:
            break
        b = m - score
        cand = low & (b > 0)
        a = Kdiag[i] + Kdiag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        yi, yj = y[i], y[j]
        Qi = yi * y * K[i]
        Qj = yj * y * K[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if yi != yj:
            quad = max(Kdiag[i] + Kdiag[j] + 2.0 * Qi[j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(Kdiag[i] + Kdiag[j] - 2.0 * Qi[j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)
    else:
        raise NoConvergence(f"SMO did not reach KKT tolerance {tol} in {max_iter} updates")

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yG[free]))
    else:
        pos = y > 0
        at_c = alpha >= C
        ub_mask = (pos & at_c) | (~pos & (alpha <= 0))
        lb_mask = (pos & (alpha <= 0)) | (~pos & at_c)
        ub = np.min(yG[ub_mask]) if ub_mask.any() else np.inf
        lb = np.max(yG[lb_mask]) if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub + lb) else 0.0
    return alpha, rho, it


def platt_fit(f: np.ndarray, y01: np.ndarray, max_iter: int = 100):
    """Fit ``P(y=1|f) = 1 / (1 + exp(A f + B))`` (Lin, Lin & Weng 2007)."""
    f = np.asarray(f, dtype=np.float64)
    prior1 = float(np.sum(y01 == 1))
    prior0 = float(len(y01) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y01 == 1, hi, lo)
    A, B = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))

    def objective(A, B):
        fApB = f * A + B
        return float(np.sum(np.where(fApB >= 0, t * fApB + np.log1p(np.exp(-np.abs(fApB))),
                                     (t - 1) * fApB + np.log1p(np.exp(-np.abs(fApB))))))

    fval = objective(A, B)
    sigma = 1e-12
    for _ in range(max_iter):
        fApB = f * A + B
        p = np.where(fApB >= 0, np.exp(-np.abs(fApB)) / (1 + np.exp(-np.abs(fApB))),
                     1 / (1 + np.exp(-np.abs(fApB))))
        q = 1 - p
        d2 = p * q
        h11 = sigma + np.sum(f * f * d2)
        h22 = sigma + np.sum(d2)
        h21 = np.sum(f * d2)
        d1 = t - p
        g1 = np.sum(f * d1)
        g2 = np.sum(d1)
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


class SVM:
    """Binary RBF SVM on standardised features; labels in {0, 1}."""

    def __init__(self, c: float = 1.0, gamma: Optional[float] = None, tol: float = 1e-3,
                 max_iter: int = 100_000, standardize: bool = True):
        self.c = float(c)
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.standardize = standardize

    def _scale(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_

    def fit(self, X, y) -> "SVM":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        d = X.shape[1]
        if self.standardize:
            self.mean_ = X.mean(axis=0)
            sd = X.std(axis=0)
            self.scale_ = np.where(sd > 0, sd, 1.0)
        else:
            self.mean_ = np.zeros(d)
            self.scale_ = np.ones(d)
        self.gamma_ = float(self.gamma) if self.gamma is not None else 1.0 / d
        Z = self._scale(X)
        ys = np.where(y == 1, 1.0, -1.0)
        K = rbf_kernel(Z, Z, self.gamma_)
        alpha, rho, self.n_iter_ = smo_solve(K, ys, self.c, self.tol, self.max_iter)
        sv = alpha > 0
        self.support_vectors_ = Z[sv]
        self.dual_coef_ = alpha[sv] * ys[sv]
        self.rho_ = rho
        self.platt_ = platt_fit(self.dual_coef_ @ K[sv] - rho, (y == 1).astype(int))
        return self

    def decision_function(self, X) -> np.ndarray:
        Z = self._scale(X)
        if len(self.dual_coef_) == 0:
            return np.full(len(Z), -self.rho_)
        return self.dual_coef_ @ rbf_kernel(self.support_vectors_, Z, self.gamma_) - self.rho_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def predict_proba(self, X) -> np.ndarray:
        A, B = self.platt_
        z = A * self.decision_function(X) + B
        return np.where(z >= 0, np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))),
                        1 / (1 + np.exp(-np.abs(z))))

    def to_dict(self) -> dict:
        return {"c": self.c, "gamma": self.gamma_, "tol": self.tol,
                "standardize": self.standardize, "mean": self.mean_.tolist(),
                "scale": self.scale_.tolist(),
                "support_vectors": self.support_vectors_.tolist(),
                "dual_coef": self.dual_coef_.tolist(), "rho": self.rho_,
                "platt": list(self.platt_)}

    @classmethod
    def from_dict(cls, data: dict) -> "SVM":
        m = cls(data["c"], data["gamma"], data.get("tol", 1e-3),
                standardize=data.get("standardize", True))
        m.gamma_ = float(data["gamma"])
        m.mean_ = np.array(data["mean"])
        m.scale_ = np.array(data["scale"])
        d = len(m.mean_)
        m.support_vectors_ = np.array(data["support_vectors"], dtype=np.float64).reshape(-1, d)
        m.dual_coef_ = np.array(data["dual_coef"], dtype=np.float64)
        m.rho_ = float(data["rho"])
        m.platt_ = tuple(data["platt"])
        return m
