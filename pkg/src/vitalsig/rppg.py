"""Pulse extraction from facial-patch RGB traces.

Pipeline: :func:`pos_bvp` (plane-orthogonal-to-skin projection) ->
:func:`estimate_hr` (windowed spectral peak) -> :func:`clean_hr` (jump
removal) -> :func:`quality_index` (cross-patch MAE/HR).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataio import RgbPatchTraceSet
from .errors import (
    AllRemoved,
    ConstantChannel,
    MissingPerPatch,
    NoPulse,
    SamplingTooLow,
    TooShort,
    ZeroFps,
)

POS_WINDOW_S = 1.6
MIN_FPS = 15.0
HR_BAND_HZ = (0.65, 4.0)
MIN_NFFT = 8192
# pooled in-band peak / mean in-band power below this flags a window as pulseless
PEAK_RATIO = 2.0
MIN_BPM, MAX_BPM = 39.0, 240.0


@dataclass
class BvpSignal:
    """Per-patch blood-volume-pulse waveforms, shape ``(n_patches, n_frames)``."""

    fps: float
    waveforms: np.ndarray
    patch_ids: Optional[np.ndarray] = None

    @property
    def n_frames(self) -> int:
        return self.waveforms.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps


@dataclass
class HrSeries:
    """Heart-rate estimates, one per analysis window.

    ``times_s`` holds window centres. ``per_patch`` is ``(n_windows,
    n_patches)`` raw per-patch BPM; ``no_pulse`` marks windows without a
    detectable pulse (their ``values`` entry is NaN).
    """

    values: np.ndarray
    window_s: float
    hop_s: float
    times_s: Optional[np.ndarray] = None
    per_patch: Optional[np.ndarray] = None
    no_pulse: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times_s is None:
            self.times_s = self.window_s / 2.0 + self.hop_s * np.arange(len(self.values))
        self.times_s = np.asarray(self.times_s, dtype=np.float64)
        if len(self.times_s) != len(self.values):
            raise ValueError("times_s and values differ in length")
        if self.per_patch is not None:
            self.per_patch = np.asarray(self.per_patch, dtype=np.float64)
        if self.no_pulse is None:
            self.no_pulse = ~np.isfinite(self.values)
        self.no_pulse = np.asarray(self.no_pulse, dtype=bool)

    def __len__(self):
        return len(self.values)

    @property
    def span_s(self) -> tuple:
        """Time range covered by the analysis windows."""
        return (float(self.times_s[0] - self.window_s / 2.0),
                float(self.times_s[-1] + self.window_s / 2.0))

    def take(self, index) -> "HrSeries":
        """Subset of windows selected by an index array or boolean mask."""
        sel = lambda a: None if a is None else a[index]
        return HrSeries(values=self.values[index], window_s=self.window_s,
                        hop_s=self.hop_s, times_s=self.times_s[index],
                        per_patch=sel(self.per_patch), no_pulse=self.no_pulse[index])

    def to_dict(self) -> dict:
        def clean(a):
            if a is None:
                return None
            return [clean(x) if np.ndim(x) else (float(x) if np.isfinite(x) else None)
                    for x in a]

        return {
            "window_s": self.window_s,
            "hop_s": self.hop_s,
            "times_s": clean(self.times_s),
            "values": clean(self.values),
            "per_patch": clean(self.per_patch),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HrSeries":
        def arr(x):
            if x is None:
                return None
            return np.array(x, dtype=np.float64)  # None -> nan

        per_patch = arr(data.get("per_patch"))
        if per_patch is not None and per_patch.size == 0:
            per_patch = None
        return cls(values=arr(data["values"]), window_s=float(data["window_s"]),
                   hop_s=float(data["hop_s"]), times_s=arr(data.get("times_s")),
                   per_patch=per_patch)


@dataclass(frozen=True)
class QualityScore:
    mae_over_hr: float

    def __float__(self):
        return self.mae_over_hr


def pos_bvp(traces: RgbPatchTraceSet, window_s: float = POS_WINDOW_S) -> BvpSignal:
    """Blood-volume pulse for every patch via the POS projection.

    Each sliding window of ``round(window_s * fps)`` frames is temporally
    normalised, projected onto ``G - B`` and ``G + B - 2R``, combined with the
    ratio of their standard deviations, mean-centred and overlap-added.

    Parameters
    ----------
    traces : RgbPatchTraceSet
        Mean RGB per patch.
    window_s : float
        Projection window length in seconds.

    Returns
    -------
    BvpSignal
        Zero-mean pulse waveform per patch, same length as the input.
    """
    fps = float(traces.fps)
    if fps <= 0:
        raise ZeroFps("fps must be positive")
    if fps < MIN_FPS:
        raise SamplingTooLow(f"POS needs at least {MIN_FPS} fps, got {fps}")
    L = int(round(window_s * fps))
    N = traces.n_frames
    if N < L:
        raise TooShort(f"need at least {window_s} s of data, got {N / fps:.3f} s")

    out = np.zeros((traces.n_patches, N))
    M = N - L + 1
    for k in range(traces.n_patches):
        win = sliding_window_view(traces.samples[k], L, axis=0)  # (M, 3, L)
        mu = win.mean(axis=2)
        if np.any(mu == 0):
            raise ConstantChannel(
                f"patch {traces.patch_ids[k]}: a channel has zero mean in some window")
        cn = win / mu[:, :, None]
        r, g, b = cn[:, 0], cn[:, 1], cn[:, 2]
        s1 = g - b
        s2 = g + b - 2.0 * r
        sd1 = s1.std(axis=1)
        sd2 = s2.std(axis=1)
        alpha = np.zeros(M)
        ok = sd2 > 1e-12
        alpha[ok] = sd1[ok] / sd2[ok]
        h = s1 + alpha[:, None] * s2
        h -= h.mean(axis=1, keepdims=True)
        acc = out[k]
        for j in range(L):
            acc[j:j + M] += h[:, j]
    out -= out.mean(axis=1, keepdims=True)
    return BvpSignal(fps=fps, waveforms=out, patch_ids=traces.patch_ids)


def _n_windows(duration_s: float, window_s: float, hop_s: float) -> int:
    return int(np.floor((duration_s - window_s) / hop_s + 1e-9)) + 1


def band_power(segments: np.ndarray, fps: float, band=HR_BAND_HZ,
               min_nfft: int = MIN_NFFT):
    """In-band power spectrum of each row of ``segments``.

    Rows are mean-removed, Hann-tapered and zero-padded to at least
    ``min_nfft`` points. Returns ``(freqs_hz, power)``.
    """
    n = segments.shape[-1]
    nfft = max(min_nfft, 1 << int(np.ceil(np.log2(n))))
    x = segments - segments.mean(axis=-1, keepdims=True)
    x = x * np.hanning(n)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / fps)
    lo = np.searchsorted(freqs, band[0], "left")
    hi = np.searchsorted(freqs, band[1], "right")
    return freqs[lo:hi], np.abs(np.fft.rfft(x, n=nfft, axis=-1)[..., lo:hi]) ** 2


def estimate_hr(bvp: BvpSignal, window_s: float = 6.0, hop_s: float = 1.0,
                band=HR_BAND_HZ, peak_ratio: float = PEAK_RATIO,
                raise_if_empty: bool = True) -> HrSeries:
    """Windowed heart rate from the power-spectrum peak of each patch.

    Every ``window_s`` window (advanced by ``hop_s``) of every patch is
    Hann-tapered, zero-padded to at least 8192 points and searched for the
    strongest bin inside ``band``; 60 times that frequency is the patch's
    BPM. The window value is the median over patches.

    A window is flagged pulseless (value NaN) when the peak of the
    patch-averaged spectrum, each patch normalised to unit mean in-band
    power, is below ``peak_ratio`` times the mean in-band power.

    Raises
    ------
    TooShort
        The signal is shorter than one window.
    NoPulse
        Every window is pulseless (only if ``raise_if_empty``).
    """
    fps = bvp.fps
    duration = bvp.duration_s
    if duration + 1e-9 < window_s:
        raise TooShort(f"need at least {window_s} s of BVP, got {duration:.3f} s")
    n_win = _n_windows(duration, window_s, hop_s)
    L = int(round(window_s * fps))
    starts = np.round(np.arange(n_win) * hop_s * fps).astype(int)
    starts = np.minimum(starts, bvp.n_frames - L)
    idx = starts[:, None] + np.arange(L)

    n_patch = bvp.waveforms.shape[0]
    per_patch = np.empty((n_win, n_patch))
    pooled = 0.0
    for k in range(n_patch):
        freqs, power = band_power(bvp.waveforms[k][idx], fps, band)
        per_patch[:, k] = 60.0 * freqs[np.argmax(power, axis=1)]
        mean = power.mean(axis=1, keepdims=True)
        pooled = pooled + np.divide(power, mean, out=np.zeros_like(power), where=mean > 0)
    pooled = pooled / n_patch
    ratio = pooled.max(axis=1) / np.maximum(pooled.mean(axis=1), 1e-300)
    no_pulse = ratio < peak_ratio

    values = np.median(per_patch, axis=1)
    values[no_pulse] = np.nan
    if raise_if_empty and np.all(no_pulse):
        raise NoPulse("no window contains a detectable pulse")
    return HrSeries(values=values, window_s=window_s, hop_s=hop_s,
                    times_s=window_s / 2.0 + hop_s * np.arange(n_win),
                    per_patch=per_patch, no_pulse=no_pulse)


def clean_hr(hr: HrSeries, jump_bpm: float = 25.0, min_survivors: int = 2) -> HrSeries:
    """Remove implausible jumps from an HR series.

    Pulseless (NaN) windows are dropped first. Then, wherever two adjacent
    values differ by more than ``jump_bpm``, the one farther from the median
    of the series is deleted (the later one on a tie), and the scan is
    repeated until a full pass deletes nothing.

    Raises
    ------
    AllRemoved
        Fewer than ``min_survivors`` values remain.
    """
    keep = np.flatnonzero(np.isfinite(hr.values))
    if len(keep) < min_survivors:
        raise AllRemoved(f"only {len(keep)} usable HR values")
    vals = hr.values[keep]
    median = float(np.median(vals))
    order = list(range(len(vals)))

    changed = True
    while changed:
        changed = False
        i = 1
        while i < len(order):
            a, b = vals[order[i - 1]], vals[order[i]]
            if abs(b - a) > jump_bpm:
                changed = True
                if abs(a - median) > abs(b - median):
                    del order[i - 1]
                    i = max(i - 1, 1)
                else:
                    del order[i]
            else:
                i += 1

    if len(order) < min_survivors:
        raise AllRemoved(f"only {len(order)} HR values survive cleaning")
    return hr.take(keep[np.array(order, dtype=int)])


def quality_index(hr: HrSeries) -> QualityScore:
    """MAE/HR signal-quality index across patches.

    For each window the mean absolute deviation of the patch estimates from
    their median is taken; the index is the mean of those deviations divided
    by the mean heart rate. Lower is better; 0 means all patches agree.
    """
    if hr.per_patch is None or hr.per_patch.ndim != 2 or hr.per_patch.shape[1] < 2:
        raise MissingPerPatch("quality index needs per-patch estimates from >= 2 patches")
    usable = np.isfinite(hr.values)
    if not np.any(usable):
        raise MissingPerPatch("no usable windows")
    pp = hr.per_patch[usable]
    med = np.median(pp, axis=1, keepdims=True)
    window_mae = np.mean(np.abs(pp - med), axis=1)
    return QualityScore(float(np.mean(window_mae) / np.mean(hr.values[usable])))
