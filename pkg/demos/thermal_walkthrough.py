"""
Thermal ROI features
====================

Build noise-free thermal traces with known per-ROI warming, recover the
last-minus-first segment change and express it relative to the forehead.
"""

from vitalsig import thermal
from vitalsig.synthgen import synth_thermal

baselines = {58: 34.5, 61: 33.9, 65: 34.1, 67: 33.2}
steps = {58: 0.40, 61: 0.10, 65: -0.20, 67: 0.35}
traces = synth_thermal(baselines, steps, fps=1.0, duration_s=300)

delta = thermal.segment_delta(traces)
for roi in thermal.ordered_rois(delta):
    print(f"ROI {roi}: injected {steps[roi]:+.2f} C, recovered {delta[roi]:+.4f} C")

features = thermal.thermal_features(traces)
print(features)
