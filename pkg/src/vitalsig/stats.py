"""Statistical kernels: Student-t distribution, Pearson correlation,
paired/unpaired t-tests and mean absolute error.

All tests are two-sided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantInput, LengthMismatch, TooFewSamples, ZeroVariance

_CF_MAX_ITER = 300
_CF_EPS = 1e-16
_TINY = 1e-300


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: float
    n: int

    __test__ = False  # not a pytest class


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the continued fraction converges fast on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """Student-t cumulative distribution function."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for T ~ Student-t(df)."""
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(0.5 * df, 0.5, df / (df + t * t)))


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    return x, y


def pearson(x, y) -> TestResult:
    """Pearson correlation with a two-sided p-value from t = r*sqrt((n-2)/(1-r^2))."""
    x, y = _as_pair(x, y)
    n = len(x)
    if n < 3:
        raise TooFewSamples("pearson needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("pearson is undefined for constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        p = t_sf_two_sided(r * math.sqrt(df / (1.0 - r * r)), df)
    return TestResult(statistic=r, p_value=p, df=df, n=n)


def paired_ttest(a, b) -> TestResult:
    """Paired t-test on ``a - b``."""
    a, b = _as_pair(a, b)
    n = len(a)
    if n < 2:
        raise TooFewSamples("paired t-test needs at least 2 pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TestResult(statistic=0.0, p_value=1.0, df=n - 1, n=n)
        raise ZeroVariance("differences have zero variance")
    t = mean / (sd / math.sqrt(n))
    return TestResult(statistic=t, p_value=t_sf_two_sided(t, n - 1), df=n - 1, n=n)


def ttest_ind(a, b) -> TestResult:
    """Two-sample t-test with pooled variance (the unpaired fallback)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise TooFewSamples("each group needs at least 2 values")
    df = na + nb - 2
    pooled = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / df
    if pooled == 0.0:
        raise ZeroVariance("both groups are constant")
    t = (a.mean() - b.mean()) / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    return TestResult(statistic=float(t), p_value=t_sf_two_sided(t, df), df=df, n=na + nb)


def mae(a, b) -> float:
    a, b = _as_pair(a, b)
    if len(a) == 0:
        raise LengthMismatch("mae needs at least one pair")
    return float(np.mean(np.abs(a - b)))
