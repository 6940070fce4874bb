import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vitalsig import ecgref
from vitalsig.dataio import EcgTrace
from vitalsig.ecgref import PairedSample
from vitalsig.errors import InsufficientPairs, NoBeatsDetected, SamplingTooLow, TooShort
from vitalsig.hrv import HrvMetrics
from vitalsig.synthgen import synth_ecg


def test_constant_rr_peaks_within_one_sample():
    tr, truth = synth_ecg([800] * 20, fs=250)
    idx = ecgref.r_peak_indices(tr)
    assert len(idx) == 20
    assert np.all(np.abs(idx - truth * 250) <= 1)


def test_alternating_rr():
    rr = [750, 850] * 10
    tr, _ = synth_ecg(rr, fs=250)
    nn = ecgref.detect_r_peaks(tr)
    assert np.all(np.abs(nn.intervals_ms - rr[1:]) <= 4)


def test_flat_line():
    with pytest.raises(NoBeatsDetected):
        ecgref.detect_r_peaks(EcgTrace(250, np.zeros(5000)))


def test_detector_preconditions():
    with pytest.raises(SamplingTooLow):
        ecgref.detect_r_peaks(EcgTrace(100, np.zeros(5000)))
    with pytest.raises(TooShort):
        ecgref.detect_r_peaks(EcgTrace(250, np.zeros(1000)))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(600, 1200), min_size=15, max_size=40), st.sampled_from([250.0, 500.0]))
def test_detection_f1_on_clean_ecg(rr, fs):
    tr, truth = synth_ecg(rr, fs=fs)
    found = ecgref.r_peak_indices(tr) / fs
    assert ecgref.match_peaks(found, truth)["f1"] >= 0.99


def test_start_offset_shifts_times():
    tr, truth = synth_ecg([900] * 15, fs=250)
    shifted = EcgTrace(tr.fs, tr.samples, start_s=100.0)
    a = ecgref.detect_r_peaks(tr)
    b = ecgref.detect_r_peaks(shifted)
    assert np.allclose(b.timestamps_s - a.timestamps_s, 100.0)
    assert np.allclose(a.intervals_ms, b.intervals_ms)


def test_match_peaks_counts():
    m = ecgref.match_peaks([1.0, 2.02, 5.0], [1.0, 2.0, 3.0])
    assert (m["tp"], m["fp"], m["fn"]) == (2, 1, 1)
    assert m["f1"] == pytest.approx(4 / 6)


def metrics(v):
    return HrvMetrics.from_vector(v)


def make_pairs(n=40, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        q = rng.uniform(0.2, 0.5)
        truth = np.array([rng.normal(75, 10), rng.normal(50, 15), rng.normal(40, 10),
                          rng.uniform(0, 30), rng.normal(5, 1), rng.normal(6, 1), 0.0])
        truth[6] = truth[5] - truth[4]
        noisy = truth + rng.normal(0, 1, 7) * truth.std() * 4 * (q - 0.2) ** 2 * 10
        pairs.append(PairedSample(f"s{i}", metrics(noisy), metrics(truth), q))
    return pairs


def test_identical_metrics_give_r_one():
    pairs = [PairedSample(p.session_id, p.ecg, p.ecg, p.quality) for p in make_pairs()]
    for row in ecgref.agreement_sweep(pairs, [0.4, 0.5]):
        assert all(row.r[m] == pytest.approx(1.0, abs=1e-12) for m in ecgref.AGREEMENT_METRICS)


def test_lower_threshold_agrees_better():
    rows = ecgref.agreement_sweep(make_pairs(200), ecgref.parse_thresholds("0.30:0.48:0.02"))
    assert rows[0].threshold == 0.30 and rows[-1].threshold == 0.48
    assert rows[0].r["hr"] > rows[-1].r["hr"]
    assert all(a.n <= b.n for a, b in zip(rows, rows[1:]))


def test_threshold_below_every_quality():
    with pytest.raises(InsufficientPairs):
        ecgref.agreement_sweep(make_pairs(), [0.1])


def test_exclude_and_delta():
    base = make_pairs(10)
    pairs = []
    for p in base:
        pairs.append(PairedSample(p.session_id, p.rppg, p.ecg, p.quality, "first120"))
        shifted = metrics(p.rppg.as_vector() + 1)
        pairs.append(PairedSample(p.session_id, shifted, metrics(p.ecg.as_vector() + 2),
                                  p.quality + 0.01, "last120"))
    deltas = ecgref.session_deltas(pairs)
    assert len(deltas) == 10
    assert np.allclose(deltas[0].rppg.as_vector(), 1)
    assert deltas[0].quality == pytest.approx(base[0].quality + 0.01)
    rows = ecgref.agreement_sweep(pairs, [1.0], exclude=["s0", "s1"])
    assert rows[0].n == 16


def test_constant_metric_gives_nan():
    pairs = make_pairs(10)
    for p in pairs:
        p.ecg.pnn50 = 0.0
    row = ecgref.agreement_sweep(pairs, [1.0])[0]
    assert np.isnan(row.r["pnn50"]) and np.isnan(row.p["pnn50"])


def test_parse_thresholds():
    assert ecgref.parse_thresholds("0.30:0.48:0.02") == pytest.approx(
        [0.30 + 0.02 * i for i in range(10)])
    assert ecgref.parse_thresholds("0.3,0.42") == [0.3, 0.42]
    assert len(ecgref.AGREEMENT_CSV_HEADER) == 14
