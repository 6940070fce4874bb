"""R-peak detection on reference ECG and r-PPG/ECG agreement sweeps.

The detector is the two-moving-average QRS detector: band-pass 8-20 Hz,
square, compare a QRS-length moving average against a beat-length one, and
take the largest filtered sample in each block of interest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import butter, sosfiltfilt

from . import stats
from .dataio import EcgTrace
from .errors import (
    ConstantInput,
    InsufficientPairs,
    NoBeatsDetected,
    SamplingTooLow,
    TooShort,
)
from .hrv import HrvMetrics, NnSeries

MIN_FS = 125.0
MIN_DURATION_S = 10.0
BANDPASS_HZ = (8.0, 20.0)
QRS_WINDOW_S = 0.097
BEAT_WINDOW_S = 0.611
OFFSET_FACTOR = 0.08
MIN_BLOCK_S = 0.080
REFRACTORY_S = 0.300

# column order of the agreement table
AGREEMENT_METRICS = ("hr", "rmssd", "pnn50", "sdnn", "ln_hf", "ln_lf")


def _moving_average(x: np.ndarray, n: int) -> np.ndarray:
    return uniform_filter1d(x, size=max(int(n), 1), mode="nearest")


def r_peak_indices(ecg: EcgTrace) -> np.ndarray:
    """Sample indices of detected R peaks."""
    fs = ecg.fs
    if fs < MIN_FS:
        raise SamplingTooLow(f"R-peak detection needs fs >= {MIN_FS} Hz, got {fs}")
    if ecg.duration_s < MIN_DURATION_S:
        raise TooShort(f"R-peak detection needs >= {MIN_DURATION_S} s of ECG")

    sos = butter(2, BANDPASS_HZ, btype="bandpass", fs=fs, output="sos")
    filtered = sosfiltfilt(sos, ecg.samples)
    energy = filtered ** 2
    mean_energy = float(np.mean(energy))
    if mean_energy <= 0 or not np.isfinite(mean_energy):
        raise NoBeatsDetected("ECG has no energy in the QRS band")

    ma_qrs = _moving_average(energy, round(QRS_WINDOW_S * fs))
    ma_beat = _moving_average(energy, round(BEAT_WINDOW_S * fs))
    active = ma_qrs > ma_beat + OFFSET_FACTOR * mean_energy

    edges = np.diff(np.concatenate(([0], active.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    min_block = round(MIN_BLOCK_S * fs)
    refractory = REFRACTORY_S * fs

    peaks: List[int] = []
    for s, e in zip(starts, stops):
        if e - s < min_block:
            continue
        p = s + int(np.argmax(filtered[s:e]))
        if peaks and p - peaks[-1] < refractory:
            if filtered[p] > filtered[peaks[-1]]:
                peaks[-1] = p
            continue
        peaks.append(p)
    if not peaks:
        raise NoBeatsDetected("no QRS complexes found")
    return np.array(peaks, dtype=np.int64)


def detect_r_peaks(ecg: EcgTrace) -> NnSeries:
    """NN intervals (ms) between successive R peaks, stamped at the later peak.

    Raises
    ------
    SamplingTooLow, TooShort, NoBeatsDetected
    """
    idx = r_peak_indices(ecg)
    if len(idx) < 2:
        raise NoBeatsDetected("fewer than two R peaks detected")
    t = ecg.start_s + idx / ecg.fs
    return NnSeries(np.diff(t) * 1000.0, t[1:])


def match_peaks(detected, truth, tolerance_s: float = 0.05) -> dict:
    """Greedy one-to-one matching of detected to true peak times.

    Returns counts, F1 and the timing errors of matched peaks.
    """
    detected = np.sort(np.asarray(detected, dtype=np.float64))
    truth = np.sort(np.asarray(truth, dtype=np.float64))
    used = np.zeros(len(detected), dtype=bool)
    errors = []
    for t in truth:
        if not len(detected):
            break
        j = int(np.argmin(np.where(used, np.inf, np.abs(detected - t))))
        if not used[j] and abs(detected[j] - t) <= tolerance_s:
            used[j] = True
            errors.append(detected[j] - t)
    tp = len(errors)
    fp = len(detected) - tp
    fn = len(truth) - tp
    f1 = 2 * tp / (2 * tp + fp + fn) if (tp + fp + fn) else 1.0
    return {"tp": tp, "fp": fp, "fn": fn, "f1": f1, "errors_s": np.array(errors)}


@dataclass
class PairedSample:
    """One segment measured by both r-PPG and ECG."""

    session_id: str
    rppg: HrvMetrics
    ecg: HrvMetrics
    quality: float
    segment: str = ""


@dataclass
class AgreementRow:
    threshold: float
    r: Dict[str, float]
    p: Dict[str, float]
    n: int

    def to_csv_row(self) -> list:
        return ([self.threshold] + [self.r[m] for m in AGREEMENT_METRICS]
                + [self.p[m] for m in AGREEMENT_METRICS] + [self.n])


AGREEMENT_CSV_HEADER = (["threshold"] + [f"r_{m}" for m in AGREEMENT_METRICS]
                        + [f"p_{m}" for m in AGREEMENT_METRICS] + ["n"])


def session_deltas(pairs: Sequence[PairedSample], first: str = "first120",
                   last: str = "last120") -> List[PairedSample]:
    """Per-session last-minus-first differences of both measurements.

    The delta's quality is the worse of the two segment qualities.
    """
    by_session: Dict[str, Dict[str, PairedSample]] = {}
    for p in pairs:
        by_session.setdefault(p.session_id, {})[p.segment] = p
    out = []
    for sid in sorted(by_session):
        segs = by_session[sid]
        if first not in segs or last not in segs:
            continue
        a, b = segs[first], segs[last]
        out.append(PairedSample(
            session_id=sid,
            rppg=HrvMetrics.from_vector(b.rppg.as_vector() - a.rppg.as_vector()),
            ecg=HrvMetrics.from_vector(b.ecg.as_vector() - a.ecg.as_vector()),
            quality=max(a.quality, b.quality), segment="delta"))
    return out


def agreement_sweep(pairs: Sequence[PairedSample], thresholds: Sequence[float],
                    delta: bool = False, exclude: Sequence[str] = ()) -> List[AgreementRow]:
    """Pearson agreement between r-PPG and ECG metrics per quality threshold.

    For each threshold only pairs with ``quality <= threshold`` are kept.
    A metric that is constant within the kept pairs gets ``r = p = NaN``.

    Raises
    ------
    InsufficientPairs
        Fewer than 3 pairs survive some threshold.
    """
    pairs = [p for p in pairs if p.session_id not in set(exclude)]
    if delta:
        pairs = session_deltas(pairs)
    rows = []
    for thr in thresholds:
        kept = [p for p in pairs if p.quality <= thr]
        if len(kept) < 3:
            raise InsufficientPairs(
                f"threshold {thr}: {len(kept)} pairs kept, at least 3 required")
        a = {k: [] for k in AGREEMENT_METRICS}
        b = {k: [] for k in AGREEMENT_METRICS}
        for p in kept:
            ra, ea = p.rppg.to_dict(), p.ecg.to_dict()
            for k in AGREEMENT_METRICS:
                a[k].append(ra[k])
                b[k].append(ea[k])
        r, pv = {}, {}
        for k in AGREEMENT_METRICS:
            try:
                res = stats.pearson(a[k], b[k])
                r[k], pv[k] = res.statistic, res.p_value
            except ConstantInput:
                r[k], pv[k] = float("nan"), float("nan")
        rows.append(AgreementRow(threshold=float(thr), r=r, p=pv, n=len(kept)))
    return rows


def parse_thresholds(text: str) -> List[float]:
    """``"0.30:0.48:0.02"`` (inclusive range) or ``"0.3,0.42"``."""
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 10) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]
