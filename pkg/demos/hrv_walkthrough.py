"""
Heart-rate variability from NN intervals
========================================

Time-domain metrics on hand-built interval series, then LF/HF band
powers of sinusoidally modulated tachograms.
"""

import numpy as np

from vitalsig import hrv
from vitalsig.hrv import NnSeries

# alternating intervals have closed-form answers
nn = NnSeries(np.array([800.0, 850.0] * 50), np.arange(100.0))
sdnn, rmssd, pnn50 = hrv.time_domain(nn)
print(f"SDNN {sdnn:.3f} ms, rMSSD {rmssd:.3f} ms, pNN50 {pnn50:.1f} %")

# slow (0.1 Hz) and fast (0.3 Hz) modulation land in different bands
t = np.arange(0, 300, 0.25)
for f_mod in (0.1, 0.3):
    fd = hrv.freq_domain(NnSeries(800 + 40 * np.sin(2 * np.pi * f_mod * t), t))
    print(f"{f_mod} Hz modulation: ln LF {fd.ln_lf:7.2f}  ln HF {fd.ln_hf:7.2f}  "
          f"ln LF/HF {fd.ln_lf_hf:7.2f}")

# full metric vector from a heart-rate series
hr = np.clip(70 + np.cumsum(np.random.default_rng(0).normal(0, 0.8, 240)), 50, 110)
metrics = hrv.nn_metrics(NnSeries(60000.0 / hr, np.arange(240.0)))
print(metrics)
