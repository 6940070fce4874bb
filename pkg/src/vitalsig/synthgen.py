"""Synthetic traces and datasets with known ground truth.

Every generator draws from :class:`vitalsig.rng.SplitMix64`, so equal seeds
give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .dataio import (
    EcgTrace,
    RgbPatchTraceSet,
    SessionManifest,
    ThermalTraceSet,
    write_ecg,
    write_manifest,
    write_rgb_traces,
    write_thermal_traces,
)
from .errors import InvalidRr, InvalidSpec, TooShort
from .rng import SplitMix64
from .rppg import HrSeries
from .thermal import ROI_ORDER

# pulse amplitude per channel relative to G
CHANNEL_RATIOS = {"r": 0.5, "g": 1.0, "b": 0.3}
# mean skin intensities on the 0..255 scale
BASE_RGB = (150.0, 110.0, 90.0)
BASE_JITTER = 15.0
MIN_PROFILE_BPM, MAX_PROFILE_BPM = 39.0, 240.0


@dataclass(frozen=True)
class HrProfile:
    """Heart rate over time.

    Breakpoints ``(times_s, bpm)`` are joined linearly (``interp="linear"``)
    or held (``interp="step"``); an optional sinusoid of
    ``sin_amplitude_bpm`` at ``sin_freq_hz`` is added on top.
    """

    times_s: tuple = (0.0,)
    bpm: tuple = (72.0,)
    interp: str = "linear"
    sin_amplitude_bpm: float = 0.0
    sin_freq_hz: float = 0.1

    @classmethod
    def constant(cls, bpm: float) -> "HrProfile":
        return cls(times_s=(0.0,), bpm=(float(bpm),))

    @classmethod
    def ramp(cls, start_bpm: float, end_bpm: float, t0: float, t1: float) -> "HrProfile":
        return cls(times_s=(float(t0), float(t1)), bpm=(float(start_bpm), float(end_bpm)))

    @classmethod
    def steps(cls, times_s: Sequence[float], bpm: Sequence[float]) -> "HrProfile":
        return cls(times_s=tuple(map(float, times_s)), bpm=tuple(map(float, bpm)),
                   interp="step")

    @classmethod
    def sinusoidal(cls, mean_bpm: float, amplitude_bpm: float, freq_hz: float) -> "HrProfile":
        return cls(times_s=(0.0,), bpm=(float(mean_bpm),),
                   sin_amplitude_bpm=float(amplitude_bpm), sin_freq_hz=float(freq_hz))

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        knots = np.asarray(self.times_s)
        vals = np.asarray(self.bpm)
        if self.interp == "step":
            idx = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(vals) - 1)
            base = vals[idx]
        else:
            base = np.interp(t, knots, vals)
        return base + self.sin_amplitude_bpm * np.sin(2 * np.pi * self.sin_freq_hz * t)

    def bounds(self) -> tuple:
        lo = min(self.bpm) - abs(self.sin_amplitude_bpm)
        hi = max(self.bpm) + abs(self.sin_amplitude_bpm)
        return lo, hi


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    duration_s: float = 60.0
    fps: float = 30.0
    hr_profile: Union[HrProfile, float] = 72.0
    modulation_depth: float = 0.02
    noise_sigma: float = 0.0
    n_patches: int = 16
    hop_s: float = 1.0

    @property
    def profile(self) -> HrProfile:
        if isinstance(self.hr_profile, HrProfile):
            return self.hr_profile
        return HrProfile.constant(float(self.hr_profile))

    def validate(self):
        lo, hi = self.profile.bounds()
        if lo < MIN_PROFILE_BPM or hi > MAX_PROFILE_BPM:
            raise InvalidSpec(f"HR profile spans {lo:.1f}-{hi:.1f} BPM, outside [39, 240]")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")
        if self.modulation_depth < 0:
            raise InvalidSpec("modulation_depth must be >= 0")
        if self.duration_s <= 0 or self.fps <= 0 or self.n_patches < 1:
            raise InvalidSpec("duration_s, fps and n_patches must be positive")


def _pulse_phase(profile: HrProfile, t: np.ndarray) -> np.ndarray:
    """2*pi times the integral of the instantaneous beat frequency."""
    f = profile(t) / 60.0
    cyc = np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))))
    return 2 * np.pi * cyc


def synth_rppg(spec: SynthSpec):
    """Patch RGB traces carrying a pulse that follows ``spec.hr_profile``.

    Each channel is ``base * (1 + depth * ratio * cos(phase)) + noise`` on the
    0..255 scale, with G:R:B pulse ratios 1 : 0.5 : 0.3 and per-patch base
    intensities, then stored normalised to [0, 1].

    Returns
    -------
    traces : RgbPatchTraceSet
    truth : HrSeries
        Profile BPM sampled every ``spec.hop_s`` seconds from 0 to the
        duration inclusive.
    """
    spec.validate()
    rng = SplitMix64(spec.seed)
    n = int(round(spec.duration_s * spec.fps))
    t = np.arange(n) / spec.fps
    pulse = np.cos(_pulse_phase(spec.profile, t))

    ratios = np.array([CHANNEL_RATIOS["r"], CHANNEL_RATIOS["g"], CHANNEL_RATIOS["b"]])
    base = np.array(BASE_RGB)[None, :] + rng.uniform(-BASE_JITTER, BASE_JITTER,
                                                     3 * spec.n_patches).reshape(-1, 3)
    samples = base[:, None, :] * (1.0 + spec.modulation_depth * ratios[None, None, :]
                                  * pulse[None, :, None])
    if spec.noise_sigma > 0:
        samples = samples + rng.normal(samples.size, scale=spec.noise_sigma).reshape(samples.shape)
    traces = RgbPatchTraceSet(fps=spec.fps, patch_ids=np.arange(spec.n_patches),
                              samples=samples / 255.0)

    t_truth = spec.hop_s * np.arange(int(np.floor(spec.duration_s / spec.hop_s + 1e-9)) + 1)
    truth = HrSeries(values=spec.profile(t_truth), window_s=0.0, hop_s=spec.hop_s,
                     times_s=t_truth)
    return traces, truth


def synth_ecg(rr_ms: Sequence[float], fs: float = 250.0, width_ms: float = 20.0,
              amplitude: float = 1.0, tail_s: float = 1.0, noise_sigma: float = 0.0,
              seed: int = 0):
    """ECG made of Gaussian R spikes on a flat baseline.

    Peaks sit at the cumulative sums of ``rr_ms`` (the first one at
    ``rr_ms[0]``); ``width_ms`` is the full width at half maximum.

    Returns
    -------
    trace : EcgTrace
    r_peak_times : ndarray
        Exact peak instants in seconds.
    """
    rr = np.asarray(rr_ms, dtype=np.float64)
    if rr.ndim != 1 or len(rr) == 0:
        raise InvalidRr("rr_ms must be a non-empty sequence")
    if np.any(rr < 250) or np.any(rr > 2000):
        raise InvalidRr("RR intervals must lie in [250, 2000] ms")
    if fs <= 0:
        raise InvalidSpec("fs must be positive")
    peaks = np.cumsum(rr) / 1000.0
    n = int(np.ceil((peaks[-1] + tail_s) * fs)) + 1
    t = np.arange(n) / fs
    sigma = width_ms / 1000.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    x = np.zeros(n)
    half = int(np.ceil(6 * sigma * fs)) + 1
    for p in peaks:
        c = int(round(p * fs))
        lo, hi = max(c - half, 0), min(c + half + 1, n)
        x[lo:hi] += amplitude * np.exp(-0.5 * ((t[lo:hi] - p) / sigma) ** 2)
    if noise_sigma > 0:
        x = x + SplitMix64(seed).normal(n, scale=noise_sigma)
    return EcgTrace(fs=float(fs), samples=x), peaks


def synth_thermal(baselines: Mapping[int, float], step_delta: Mapping[int, float],
                  fps: float = 1.0, duration_s: float = 300.0,
                  drift_c_per_s: Union[float, Mapping[int, float]] = 0.0,
                  noise_sigma: float = 0.0, seed: int = 0) -> ThermalTraceSet:
    """ROI temperatures holding ``baseline`` for the first half of the
    recording and ``baseline + step_delta`` for the second half, plus an
    optional linear drift and white noise."""
    if duration_s < 240:
        raise TooShort("thermal recordings need >= 240 s for two 120-s segments")
    roi_ids = sorted(baselines)
    n = int(round(duration_s * fps))
    t = np.arange(n) / fps
    second = np.arange(n) >= n // 2
    rng = SplitMix64(seed)
    rows = []
    for roi in roi_ids:
        drift = drift_c_per_s.get(roi, 0.0) if isinstance(drift_c_per_s, Mapping) else drift_c_per_s
        row = np.full(n, float(baselines[roi]))
        row[second] += float(step_delta.get(roi, 0.0))
        if drift:
            row = row + drift * t
        if noise_sigma > 0:
            row = row + rng.normal(n, scale=noise_sigma)
        rows.append(row)
    return ThermalTraceSet(fps=float(fps), roi_ids=np.array(roi_ids), samples=np.array(rows))


def synth_dataset(n_per_class: int, n_features: int, separation: float, seed: int = 0,
                  n_informative: int = 2, informative: Optional[Sequence[int]] = None,
                  feature_names: Optional[Sequence[str]] = None, mode: str = "early_fusion"):
    """Two Gaussian classes, unit variance, whose means differ by
    ``separation`` on the informative features only.

    Class 1 is shifted by ``+separation/2`` and class 0 by ``-separation/2``
    on each informative feature. Rows are interleaved (0, 1, 0, 1, ...), and
    each row is its own session.
    """
    from .ml.dataset import Dataset

    if n_features < 2:
        raise InvalidSpec("n_features must be >= 2")
    if n_per_class < 1:
        raise InvalidSpec("n_per_class must be >= 1")
    if informative is None:
        informative = range(min(n_informative, n_features))
    mask = np.zeros(n_features, dtype=bool)
    mask[list(informative)] = True

    rng = SplitMix64(seed)
    n = 2 * n_per_class
    y = np.tile([0, 1], n_per_class)
    X = rng.normal(n * n_features).reshape(n, n_features)
    shift = np.where(y == 1, 0.5, -0.5)[:, None] * separation
    X[:, mask] += shift
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(n_features)]
    return Dataset(X=X, y=y, session_ids=np.array([f"s{i:04d}" for i in range(n)]),
                   feature_names=names, mode=mode, informative_mask=mask)


def rr_from_profile(profile: HrProfile, duration_s: float) -> np.ndarray:
    """RR intervals (ms) of beats following ``profile`` until ``duration_s``."""
    rr, t = [], 0.0
    while t < duration_s:
        interval = 60.0 / float(profile(t))
        rr.append(1000.0 * interval)
        t += interval
    return np.array(rr)


# corpus defaults: short enough to keep files small, long enough for two 120-s segments
CORPUS_DURATION_S = 260.0
CORPUS_FPS = 20.0
CORPUS_PATCHES = 8
CORPUS_NOISE = (0.25, 0.5, 0.75, 1.0)


def synth_corpus(out_dir, n_sessions: int = 4, seed: int = 0,
                 duration_s: float = CORPUS_DURATION_S, with_ecg: bool = True) -> list:
    """Write a small multi-session corpus with manifests and a truth sidecar.

    Every session is ``stimulated``: heart rate steps up and ROI
    temperatures step by per-ROI amounts halfway through. Heart rate also
    carries a slow 0.05 Hz oscillation so the segments have non-trivial
    variability. Returns the manifest paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = SplitMix64(seed)
    truth, manifests = {}, []
    for i in range(n_sessions):
        rng = master.spawn(i)
        sid = f"S{i + 1:02d}"
        sdir = out / sid
        sdir.mkdir(exist_ok=True)
        base_bpm, step_bpm = rng.uniform(62.0, 78.0, 2) * np.array([1.0, 0.12])
        profile = HrProfile(times_s=(0.0, duration_s / 2), bpm=(base_bpm, base_bpm + step_bpm),
                            interp="step", sin_amplitude_bpm=3.0, sin_freq_hz=0.05)
        noise = CORPUS_NOISE[i % len(CORPUS_NOISE)]
        traces, _ = synth_rppg(SynthSpec(seed=int(rng.next_u64(1)[0] >> 1), duration_s=duration_s,
                                         fps=CORPUS_FPS, hr_profile=profile, noise_sigma=noise,
                                         n_patches=CORPUS_PATCHES))
        baselines = dict(zip(ROI_ORDER, rng.uniform(33.0, 35.5, len(ROI_ORDER))))
        steps = dict(zip(ROI_ORDER, np.round(rng.uniform(-0.6, 0.3, len(ROI_ORDER)), 3)))
        # noise-free so the injected steps are recoverable exactly
        thermal = synth_thermal(baselines, steps, fps=1.0, duration_s=duration_s)
        write_rgb_traces(traces, sdir / "rgb.csv")
        write_thermal_traces(thermal, sdir / "thermal.csv")
        ecg_path = None
        entry = {"condition_label": "stimulated", "noise_sigma": noise,
                 "hr_bpm": [float(base_bpm), float(base_bpm + step_bpm)],
                 "thermal_step_c": {str(r): float(steps[r]) for r in ROI_ORDER}}
        if with_ecg:
            rr = rr_from_profile(profile, duration_s)
            ecg, peaks = synth_ecg(rr, fs=250.0, noise_sigma=0.01,
                                   seed=int(rng.next_u64(1)[0] >> 1))
            ecg_path = sdir / "ecg.csv"
            write_ecg(ecg, ecg_path)
            entry["n_beats"] = int(len(peaks))
        manifest = SessionManifest(sid, "stimulated", sdir / "rgb.csv", sdir / "thermal.csv",
                                   ecg_path)
        write_manifest(manifest, sdir / "manifest.json")
        manifests.append(sdir / "manifest.json")
        truth[sid] = entry
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return manifests
