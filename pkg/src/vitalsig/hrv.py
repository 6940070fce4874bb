"""Heart-rate variability for 120-second segments.

NN intervals are derived from the windowed HR series (``60000 / BPM``), not
from beat detection, so variability is smoothed by the HR window length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import welch

from .errors import (
    EmptySeries,
    HrvOutlier,
    SegmentOutOfRange,
    TooFewIntervals,
    TooShort,
)
from .rppg import HrSeries

NN_RANGE_MS = (250.0, 2000.0)
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.4)
RESAMPLE_HZ = 4.0
WELCH_NPERSEG = 256
POWER_FLOOR = 1e-12
MIN_SPECTRAL_SPAN_S = 60.0
SEGMENT_S = 120.0
# plausibility limits; metrics beyond these are rejected as outliers
MAX_HR_BPM = 240.0
MAX_SDNN_MS = 300.0

# key order of the metrics JSON
METRIC_KEYS = ("hr", "sdnn", "rmssd", "pnn50", "ln_hf", "ln_lf", "ln_lf_hf")


@dataclass
class NnSeries:
    intervals_ms: np.ndarray
    timestamps_s: np.ndarray

    def __post_init__(self):
        self.intervals_ms = np.asarray(self.intervals_ms, dtype=np.float64)
        self.timestamps_s = np.asarray(self.timestamps_s, dtype=np.float64)
        if len(self.intervals_ms) != len(self.timestamps_s):
            raise ValueError("intervals and timestamps differ in length")
        if len(self.timestamps_s) > 1 and np.any(np.diff(self.timestamps_s) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.intervals_ms)

    def between(self, start_s: float, end_s: float) -> "NnSeries":
        m = (self.timestamps_s >= start_s) & (self.timestamps_s <= end_s)
        return NnSeries(self.intervals_ms[m], self.timestamps_s[m])


@dataclass(frozen=True)
class FreqDomain:
    lf: float
    hf: float
    ln_lf: float
    ln_hf: float
    ln_lf_hf: float
    degenerate: bool = False


@dataclass
class HrvMetrics:
    hr_mean: float
    sdnn: float
    rmssd: float
    pnn50: float
    ln_lf: float
    ln_hf: float
    ln_lf_hf: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        """Metrics keyed in the order hr, sdnn, rmssd, pnn50, ln_hf, ln_lf, ln_lf_hf."""
        return {k: float(v) for k, v in zip(METRIC_KEYS, self.as_vector())}

    def as_vector(self) -> np.ndarray:
        return np.array([self.hr_mean, self.sdnn, self.rmssd, self.pnn50,
                         self.ln_hf, self.ln_lf, self.ln_lf_hf])

    @classmethod
    def from_dict(cls, data: dict) -> "HrvMetrics":
        return cls(hr_mean=data["hr"], sdnn=data["sdnn"], rmssd=data["rmssd"],
                   pnn50=data["pnn50"], ln_lf=data["ln_lf"], ln_hf=data["ln_hf"],
                   ln_lf_hf=data["ln_lf_hf"], degenerate=bool(data.get("degenerate", False)))

    @classmethod
    def from_vector(cls, v) -> "HrvMetrics":
        hr, sdnn, rmssd, pnn50, ln_hf, ln_lf, ln_lf_hf = (float(x) for x in v)
        return cls(hr, sdnn, rmssd, pnn50, ln_lf, ln_hf, ln_lf_hf)


def hr_to_nn(hr: HrSeries) -> NnSeries:
    """NN interval ``60000 / BPM`` at each HR timestamp; intervals outside
    250-2000 ms (and NaN windows) are dropped."""
    bpm = np.asarray(hr.values, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        nn = 60000.0 / bpm
    keep = np.isfinite(nn) & (nn >= NN_RANGE_MS[0]) & (nn <= NN_RANGE_MS[1])
    if not np.any(keep):
        raise EmptySeries("no HR values convert to a plausible NN interval")
    return NnSeries(nn[keep], hr.times_s[keep])


def time_domain(nn: NnSeries) -> Tuple[float, float, float]:
    """SDNN (sample SD), rMSSD and pNN50 (strictly > 50 ms) of NN intervals."""
    x = np.asarray(nn.intervals_ms if isinstance(nn, NnSeries) else nn, dtype=np.float64)
    if len(x) < 3:
        raise TooFewIntervals(f"need at least 3 intervals, got {len(x)}")
    diffs = np.diff(x)
    sdnn = float(np.std(x, ddof=1))
    rmssd = float(np.sqrt(np.mean(diffs ** 2)))
    pnn50 = float(100.0 * np.count_nonzero(np.abs(diffs) > 50.0) / len(diffs))
    return sdnn, rmssd, pnn50


def tachogram(nn: NnSeries, fs: float = RESAMPLE_HZ) -> Tuple[np.ndarray, np.ndarray]:
    """NN intervals linearly interpolated onto a uniform grid."""
    t = nn.timestamps_s
    grid = np.arange(t[0], t[-1] + 1e-9, 1.0 / fs)
    return grid, np.interp(grid, t, nn.intervals_ms)


def band_powers(nn: NnSeries, fs: float = RESAMPLE_HZ,
                nperseg: int = WELCH_NPERSEG) -> Tuple[np.ndarray, np.ndarray]:
    """Welch PSD (ms^2/Hz) of the mean-removed resampled tachogram."""
    _, x = tachogram(nn, fs)
    x = x - x.mean()
    seg = min(nperseg, len(x))
    return welch(x, fs=fs, window="hann", nperseg=seg, noverlap=seg // 2,
                 detrend=False, scaling="density")


def _band(freqs, psd, lo, hi) -> float:
    m = (freqs >= lo) & (freqs <= hi)
    if np.count_nonzero(m) < 2:
        return 0.0
    return float(trapezoid(psd[m], freqs[m]))


def freq_domain(nn: NnSeries) -> FreqDomain:
    """LF (0.04-0.15 Hz) and HF (0.15-0.4 Hz) power and their logarithms.

    The tachogram is resampled at 4 Hz and analysed with a 256-sample Hann
    Welch periodogram at 50 % overlap; band powers are trapezoid integrals of
    the PSD and are floored at 1e-12 ms^2 before the log. A constant
    tachogram gives floor values and ``degenerate=True``.
    """
    if len(nn) < 2:
        raise TooShort("need at least two NN intervals")
    span = nn.timestamps_s[-1] - nn.timestamps_s[0]
    if span + 1e-9 < MIN_SPECTRAL_SPAN_S:
        raise TooShort(f"spectral HRV needs >= {MIN_SPECTRAL_SPAN_S} s, got {span:.1f} s")
    if np.ptp(nn.intervals_ms) == 0:
        ln = math.log(POWER_FLOOR)
        return FreqDomain(POWER_FLOOR, POWER_FLOOR, ln, ln, 0.0, degenerate=True)
    freqs, psd = band_powers(nn)
    lf = max(_band(freqs, psd, *LF_BAND), POWER_FLOOR)
    hf = max(_band(freqs, psd, *HF_BAND), POWER_FLOOR)
    ln_lf, ln_hf = math.log(lf), math.log(hf)
    return FreqDomain(lf, hf, ln_lf, ln_hf, ln_lf - ln_hf,
                      degenerate=(lf == POWER_FLOOR and hf == POWER_FLOOR))


def segment_bounds(span: Tuple[float, float], which: str,
                   segment_s: float = SEGMENT_S) -> Tuple[float, float]:
    """Resolve ``first120``/``last120`` style names against a time span."""
    start, end = span
    if which.startswith("first"):
        return (start, start + segment_s)
    if which.startswith("last"):
        return (end - segment_s, end)
    raise ValueError(f"unknown segment {which!r}")


def nn_metrics(nn: NnSeries, max_hr_bpm: float = MAX_HR_BPM,
               max_sdnn_ms: float = MAX_SDNN_MS) -> HrvMetrics:
    """All seven metrics for one NN series; ``hr_mean`` is the mean of 60000/NN."""
    sdnn, rmssd, pnn50 = time_domain(nn)
    fd = freq_domain(nn)
    hr_mean = float(np.mean(60000.0 / nn.intervals_ms))
    if hr_mean > max_hr_bpm:
        raise HrvOutlier(f"mean HR {hr_mean:.1f} exceeds {max_hr_bpm}")
    if sdnn > max_sdnn_ms:
        raise HrvOutlier(f"SDNN {sdnn:.1f} ms exceeds {max_sdnn_ms}")
    return HrvMetrics(hr_mean=hr_mean, sdnn=sdnn, rmssd=rmssd, pnn50=pnn50,
                      ln_lf=fd.ln_lf, ln_hf=fd.ln_hf, ln_lf_hf=fd.ln_lf_hf,
                      degenerate=fd.degenerate)


def _check_segment(segment, span):
    start, end = segment
    tol = 1e-6
    if start < span[0] - tol or end > span[1] + tol or end <= start:
        raise SegmentOutOfRange(
            f"segment {start:.2f}-{end:.2f} s not inside {span[0]:.2f}-{span[1]:.2f} s")


def segment_metrics(hr: HrSeries, segment, segment_s: float = SEGMENT_S,
                    max_hr_bpm: float = MAX_HR_BPM,
                    max_sdnn_ms: float = MAX_SDNN_MS,
                    span: Optional[Tuple[float, float]] = None) -> HrvMetrics:
    """HRV metrics for the HR windows centred inside ``segment``.

    Parameters
    ----------
    hr : HrSeries
        Cleaned heart-rate series.
    segment : tuple of float or str
        ``(start_s, end_s)``, or ``"first120"``/``"last120"`` resolved against
        the span covered by the series windows (or ``span`` if given).
    """
    if span is None:
        span = hr.span_s
    if isinstance(segment, str):
        segment = segment_bounds(span, segment, segment_s)
    _check_segment(segment, span)
    m = (hr.times_s >= segment[0]) & (hr.times_s <= segment[1])
    return nn_metrics(hr_to_nn(hr.take(m)), max_hr_bpm, max_sdnn_ms)


def nn_segment_metrics(nn: NnSeries, segment, span: Tuple[float, float],
                       segment_s: float = SEGMENT_S, **limits) -> HrvMetrics:
    """Beat-level counterpart of :func:`segment_metrics` (used for ECG)."""
    if isinstance(segment, str):
        segment = segment_bounds(span, segment, segment_s)
    _check_segment(segment, span)
    return nn_metrics(nn.between(*segment), **limits)
