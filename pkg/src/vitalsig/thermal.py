"""Thermal ROI features: segment deltas, pairwise relative changes and
forehead-referenced changes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from .dataio import ThermalTraceSet
from .errors import MissingForehead, TooShort

SEGMENT_S = 120.0
FOREHEAD_ROI = 58

# ROI ids in canonical order with their descriptions
ROI_NAMES = {
    18: "left side of left eyebrow",
    21: "right side of left eyebrow",
    22: "left side of right eyebrow",
    25: "right side of right eyebrow",
    58: "forehead",
    28: "upper nose",
    29: "middle nose",
    30: "nose tip",
    32: "left nostril",
    34: "right nostril",
    48: "left side of lip",
    49: "outside of upper lip",
    50: "right side of lip",
    51: "outside of lower lip",
    52: "upper lip",
    53: "lower lip",
    54: "left cheek away from nose",
    55: "left cheek closer to nose",
    56: "right cheek away from nose",
    57: "right cheek closer to nose",
    59: "chin",
    60: "throat",
}
ROI_ORDER = tuple(ROI_NAMES)


@dataclass
class ThermalFeatures:
    roi_ids: Tuple[int, ...]
    delta: Dict[int, float]
    forehead_relative: Dict[int, float]
    forehead_roi: int = FOREHEAD_ROI

    def to_dict(self) -> dict:
        out = {f"delta.{r}": self.delta[r] for r in self.roi_ids}
        out.update({f"rel_forehead.{r}": self.forehead_relative[r] for r in self.roi_ids})
        return out


def ordered_rois(roi_ids) -> list:
    """Canonical ROI order first, then any other ids ascending."""
    ids = [int(r) for r in roi_ids]
    known = [r for r in ROI_ORDER if r in ids]
    return known + sorted(r for r in ids if r not in ROI_NAMES)


def _segment_frames(traces: ThermalTraceSet, segment_s: float) -> int:
    n = int(round(segment_s * traces.fps))
    if traces.n_frames < 2 * n:
        raise TooShort(f"need >= {2 * segment_s:.0f} s of thermal data, "
                       f"got {traces.duration_s:.1f} s")
    return n


def segment_means(traces: ThermalTraceSet, segment_s: float = SEGMENT_S):
    """Per-ROI mean over the first and last ``segment_s`` seconds.

    Returns two dicts ``(first, last)`` keyed by ROI id.
    """
    n = _segment_frames(traces, segment_s)
    first = traces.samples[:, :n].mean(axis=1)
    last = traces.samples[:, -n:].mean(axis=1)
    ids = [int(r) for r in traces.roi_ids]
    return dict(zip(ids, map(float, first))), dict(zip(ids, map(float, last)))


def segment_delta(traces: ThermalTraceSet, segment_s: float = SEGMENT_S) -> Dict[int, float]:
    """Mean over the last ``segment_s`` minus mean over the first, per ROI."""
    first, last = segment_means(traces, segment_s)
    return {r: last[r] - first[r] for r in ordered_rois(first)}


def relative_matrix(deltas: Mapping[int, float]):
    """Pairwise differences ``M[i, j] = delta_j - delta_i``.

    Returns ``(roi_ids, M)`` with rows/columns in :func:`ordered_rois` order.
    """
    ids = ordered_rois(deltas)
    if len(ids) < 2:
        raise ValueError("relative_matrix needs at least two ROIs")
    d = np.array([deltas[r] for r in ids], dtype=np.float64)
    return ids, d[None, :] - d[:, None]


def thermal_features(traces: ThermalTraceSet, forehead_roi: int = FOREHEAD_ROI,
                     segment_s: float = SEGMENT_S) -> ThermalFeatures:
    """Segment deltas plus deltas relative to the forehead ROI."""
    if forehead_roi not in set(int(r) for r in traces.roi_ids):
        raise MissingForehead(f"forehead ROI {forehead_roi} not present")
    delta = segment_delta(traces, segment_s)
    ref = delta[forehead_roi]
    rel = {r: (0.0 if r == forehead_roi else d - ref) for r, d in delta.items()}
    return ThermalFeatures(roi_ids=tuple(delta), delta=delta, forehead_relative=rel,
                           forehead_roi=forehead_roi)
