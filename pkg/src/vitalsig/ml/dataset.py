"""Labelled feature tables for the r-PPG, thermal and early-fusion modes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..errors import MissingModality, SingleClass
from ..hrv import METRIC_KEYS, HrvMetrics
from ..thermal import ordered_rois

RPPG_FEATURES = METRIC_KEYS
MODES = ("rppg", "thermal", "early_fusion")
MODE_ALIASES = {"early": "early_fusion", "fusion": "early_fusion"}


def thermal_feature_name(roi_id: int) -> str:
    return f"roi_{roi_id}"


@dataclass
class SegmentRecord:
    """Features of one (session, segment) pair.

    ``thermal`` maps ROI id to the segment's mean temperature.
    """

    session_id: str
    label: int
    hrv: Optional[HrvMetrics] = None
    thermal: Optional[Mapping[int, float]] = None
    segment: str = ""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    session_ids: np.ndarray
    feature_names: List[str]
    mode: str = "early_fusion"
    blocks: Dict[str, List[int]] = field(default_factory=dict)
    informative_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        self.y = np.asarray(self.y, dtype=np.int64)
        self.session_ids = np.asarray(self.session_ids).astype(str)
        self.feature_names = list(self.feature_names)
        if not (len(self.X) == len(self.y) == len(self.session_ids)):
            raise ValueError("X, y and session_ids differ in length")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("one name per feature column required")
        if self.informative_mask is not None:
            self.informative_mask = np.asarray(self.informative_mask, dtype=bool)

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.X[index], self.y[index], self.session_ids[index],
                       self.feature_names, self.mode, dict(self.blocks),
                       self.informative_mask)

    def columns(self, cols: Sequence[int], mode: Optional[str] = None) -> "Dataset":
        cols = list(cols)
        mask = None if self.informative_mask is None else self.informative_mask[cols]
        return Dataset(self.X[:, cols], self.y, self.session_ids,
                       [self.feature_names[c] for c in cols], mode or self.mode,
                       {}, mask)

    def select(self, mode: str) -> "Dataset":
        """View restricted to one modality block (or all blocks for early fusion)."""
        mode = MODE_ALIASES.get(mode, mode)
        if mode == self.mode:
            return self
        if mode == "early_fusion":
            if not all(b in self.blocks for b in ("rppg", "thermal")):
                raise MissingModality("dataset lacks one of the modality blocks")
            return self
        if mode not in self.blocks:
            raise MissingModality(f"dataset has no {mode!r} block")
        return self.columns(self.blocks[mode], mode)

    def check_classes(self):
        if len(np.unique(self.y)) < 2:
            raise SingleClass("both classes must be present")

    # -- serialisation ---------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "feature_names": self.feature_names,
            "blocks": {k: [self.feature_names[i] for i in v] for k, v in self.blocks.items()},
            "rows": [
                {"session_id": str(s), "label": int(l), "features": [float(v) for v in x]}
                for s, l, x in zip(self.session_ids, self.y, self.X)
            ],
        }
        if self.informative_mask is not None:
            out["informative_mask"] = [bool(b) for b in self.informative_mask]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        names = list(data["feature_names"])
        rows = data["rows"]
        X = np.array([r["features"] for r in rows], dtype=np.float64).reshape(len(rows), len(names))
        blocks = {k: [names.index(n) for n in v] for k, v in data.get("blocks", {}).items()}
        return cls(X=X, y=np.array([r["label"] for r in rows]),
                   session_ids=np.array([str(r["session_id"]) for r in rows]),
                   feature_names=names, mode=data.get("mode", "early_fusion"),
                   blocks=blocks, informative_mask=data.get("informative_mask"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Dataset":
        return cls.from_dict(json.loads(Path(path).read_text()))


def assemble(records: Sequence[SegmentRecord], mode: str,
             roi_ids: Optional[Sequence[int]] = None) -> Dataset:
    """One feature vector per record.

    The r-PPG block is the seven HRV metrics (hr, sdnn, rmssd, pnn50, ln_hf,
    ln_lf, ln_lf_hf); the thermal block is one value per ROI in canonical ROI order
    (``roi_ids`` defaults to the ROIs of the first record). Early fusion
    concatenates r-PPG then thermal.

    Raises
    ------
    MissingModality
        A record lacks a block the mode needs, or an ROI.
    SingleClass
        Only one label present.
    """
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not records:
        raise MissingModality("no records")
    use_rppg = mode in ("rppg", "early_fusion")
    use_thermal = mode in ("thermal", "early_fusion")

    if use_thermal:
        if roi_ids is None:
            first = records[0].thermal
            if first is None:
                raise MissingModality(f"session {records[0].session_id} has no thermal data")
            roi_ids = ordered_rois(first)
        roi_ids = list(roi_ids)

    rows = []
    for rec in records:
        parts = []
        if use_rppg:
            if rec.hrv is None:
                raise MissingModality(f"session {rec.session_id} has no r-PPG features")
            parts.append(rec.hrv.as_vector())
        if use_thermal:
            if rec.thermal is None:
                raise MissingModality(f"session {rec.session_id} has no thermal features")
            missing = [r for r in roi_ids if r not in rec.thermal]
            if missing:
                raise MissingModality(f"session {rec.session_id} lacks ROIs {missing}")
            parts.append(np.array([rec.thermal[r] for r in roi_ids], dtype=np.float64))
        row = np.concatenate(parts)
        if not np.all(np.isfinite(row)):
            raise MissingModality(f"session {rec.session_id} has non-finite features")
        rows.append(row)

    names, blocks = [], {}
    if use_rppg:
        blocks["rppg"] = list(range(len(RPPG_FEATURES)))
        names.extend(RPPG_FEATURES)
    if use_thermal:
        blocks["thermal"] = list(range(len(names), len(names) + len(roi_ids)))
        names.extend(thermal_feature_name(r) for r in roi_ids)

    ds = Dataset(X=np.vstack(rows), y=np.array([r.label for r in records]),
                 session_ids=np.array([r.session_id for r in records]),
                 feature_names=names, mode=mode, blocks=blocks)
    ds.check_classes()
    return ds


def split_blocks(ds: Dataset, rppg_width: int = len(RPPG_FEATURES),
                 mode: str = "early_fusion") -> Dataset:
    """Attach r-PPG/thermal block metadata to a plain table whose first
    ``rppg_width`` columns are the r-PPG block."""
    d = ds.n_features
    ds = Dataset(ds.X, ds.y, ds.session_ids, ds.feature_names, mode,
                 {"rppg": list(range(rppg_width)), "thermal": list(range(rppg_width, d))},
                 ds.informative_mask)
    return ds
