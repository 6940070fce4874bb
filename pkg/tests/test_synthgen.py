import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vitalsig import synthgen
from vitalsig.errors import InvalidRr, InvalidSpec, TooShort
from vitalsig.synthgen import HrProfile, SynthSpec
from vitalsig.thermal import relative_matrix, segment_delta


def test_constant_72_peak_at_1_2_hz():
    tr, truth = synthgen.synth_rppg(SynthSpec(duration_s=60, fps=30, hr_profile=72, n_patches=3))
    g = tr.samples[1, :, 1]
    g = g - np.polyval(np.polyfit(np.arange(len(g)), g, 1), np.arange(len(g)))
    nfft = 1 << 16
    f = np.fft.rfftfreq(nfft, 1 / 30)
    peak = f[np.argmax(np.abs(np.fft.rfft(g, nfft)))]
    assert abs(peak - 1.2) <= 30 / nfft
    assert np.all(truth.values == 72)


def test_channel_ratios():
    tr, _ = synthgen.synth_rppg(SynthSpec(duration_s=10, fps=30, n_patches=2))
    x = tr.samples * 255
    rel = (x.max(axis=1) - x.min(axis=1)) / (x.max(axis=1) + x.min(axis=1))
    assert np.allclose(rel[:, 0] / rel[:, 1], 0.5, rtol=1e-3)
    assert np.allclose(rel[:, 2] / rel[:, 1], 0.3, rtol=1e-3)


def test_zero_depth_is_flat():
    tr, _ = synthgen.synth_rppg(SynthSpec(modulation_depth=0.0, n_patches=2))
    assert np.all(np.ptp(tr.samples, axis=1) == 0)


def test_ramp_truth_endpoints():
    spec = SynthSpec(duration_s=120, hr_profile=HrProfile.ramp(60, 90, 0, 120))
    _, truth = synthgen.synth_rppg(spec)
    assert truth.values[0] == 60 and truth.values[-1] == 90
    assert len(truth) == 121


@pytest.mark.parametrize("profile", [30.0, 250.0, HrProfile.sinusoidal(230, 15, 0.1)])
def test_invalid_profile(profile):
    with pytest.raises(InvalidSpec):
        synthgen.synth_rppg(SynthSpec(hr_profile=profile))


def test_negative_noise():
    with pytest.raises(InvalidSpec):
        synthgen.synth_rppg(SynthSpec(noise_sigma=-1))


def test_same_seed_identical():
    s = SynthSpec(seed=8, noise_sigma=2.0, duration_s=20)
    a, _ = synthgen.synth_rppg(s)
    b, _ = synthgen.synth_rppg(s)
    c, _ = synthgen.synth_rppg(SynthSpec(seed=9, noise_sigma=2.0, duration_s=20))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_ecg_constant_rr():
    tr, peaks = synthgen.synth_ecg([800] * 10, fs=250)
    assert len(peaks) == 10
    assert np.allclose(np.diff(peaks), 0.8, atol=1e-12)
    assert tr.fs == 250


def test_ecg_alternating_rr():
    rr = [750, 850] * 6
    _, peaks = synthgen.synth_ecg(rr, fs=250)
    assert np.allclose(np.diff(peaks) * 1000, rr[1:], atol=1e-9)


def test_ecg_width_is_fwhm():
    tr, peaks = synthgen.synth_ecg([1000] * 2, fs=10_000, width_ms=20)
    above = np.flatnonzero(tr.samples >= 0.5)
    first = above[above < 15_000]
    assert (first[-1] - first[0] + 1) / 10_000 == pytest.approx(0.020, abs=2e-4)


@pytest.mark.parametrize("rr", [[200, 800], [800, 2100], []])
def test_ecg_invalid_rr(rr):
    with pytest.raises(InvalidRr):
        synthgen.synth_ecg(rr)


def test_thermal_deltas():
    tr = synthgen.synth_thermal({1: 34.0, 2: 34.0, 3: 33.0}, {2: 0.5, 3: -0.5}, duration_s=300)
    d = segment_delta(tr)
    assert d[1] == 0.0
    assert d[2] == pytest.approx(0.5, abs=1e-12)
    ids, m = relative_matrix({2: d[2], 3: d[3]})
    assert m[ids.index(3), ids.index(2)] == pytest.approx(1.0, abs=1e-12)


def test_thermal_too_short():
    with pytest.raises(TooShort):
        synthgen.synth_thermal({1: 34.0}, {}, duration_s=200)


def test_dataset_shape_and_mask():
    ds = synthgen.synth_dataset(30, 29, 6.0, seed=1, n_informative=2)
    assert ds.X.shape == (60, 29)
    assert list(np.flatnonzero(ds.informative_mask)) == [0, 1]
    gap = ds.X[ds.y == 1].mean(axis=0) - ds.X[ds.y == 0].mean(axis=0)
    assert np.all(gap[:2] > 4)
    assert np.all(np.abs(gap[2:]) < 1.5)


def test_dataset_invalid_sizes():
    with pytest.raises(InvalidSpec):
        synthgen.synth_dataset(10, 1, 1.0)
    with pytest.raises(InvalidSpec):
        synthgen.synth_dataset(0, 5, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(45, 180), st.floats(40, 120))
def test_rr_from_profile_matches_rate(bpm, duration):
    rr = synthgen.rr_from_profile(HrProfile.constant(bpm), duration)
    assert np.allclose(rr, 60000 / bpm)
    assert rr.sum() / 1000 >= duration


def test_corpus_layout(corpus_dir):
    import json
    truth = json.loads((corpus_dir / "truth.json").read_text())
    manifests = sorted(corpus_dir.glob("*/manifest.json"))
    assert len(manifests) == 4
    assert sorted(truth) == ["S01", "S02", "S03", "S04"]
    assert len(truth["S01"]["thermal_step_c"]) == 22
