"""Readers and writers for RGB patch traces, thermal ROI traces, ECG and
session manifests.

File formats
------------
RGB CSV::

    # fps=30.0
    frame_index,patch_id,r_mean,g_mean,b_mean

Thermal CSV::

    # fps=30.0
    frame_index,roi_id,temp_c

ECG CSV::

    time_s,value

Manifest JSON: ``session_id``, ``condition_label`` (``baseline`` or
``stimulated``), ``rgb_path``, ``thermal_path``, ``ecg_path`` (nullable).
Relative paths are resolved against the manifest's directory.

Floats are written with ``%.17g`` so a load/write cycle is bit-identical.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DuplicatePatch,
    DuplicateRoi,
    EmptyTrace,
    InconsistentPatchLength,
    IrregularSampling,
    MalformedRow,
    ManifestError,
    NonMonotoneTime,
    NonPositiveFps,
)

RGB_COLUMNS = ("frame_index", "patch_id", "r_mean", "g_mean", "b_mean")
THERMAL_COLUMNS = ("frame_index", "roi_id", "temp_c")
ECG_COLUMNS = ("time_s", "value")
CONDITION_LABELS = ("baseline", "stimulated")

# values at or below this are taken to be on a [0, 1] scale
UNIT_SCALE_LIMIT = 1.5
# thermal gaps longer than this invalidate the ROI
MAX_THERMAL_GAP_S = 2.0
# relative tolerance on ECG time steps
ECG_STEP_TOLERANCE = 0.01


@dataclass
class RgbPatchTraceSet:
    """Per-frame mean RGB of each facial patch.

    ``samples`` has shape ``(n_patches, n_frames, 3)`` and holds intensities
    normalised to [0, 1].
    """

    fps: float
    patch_ids: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        self.patch_ids = np.asarray(self.patch_ids, dtype=np.int64)
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not self.fps > 0:
            raise NonPositiveFps(f"fps must be positive, got {self.fps}")
        if self.samples.ndim != 3 or self.samples.shape[2] != 3:
            raise ValueError("samples must have shape (n_patches, n_frames, 3)")
        if len(self.patch_ids) != self.samples.shape[0]:
            raise ValueError("one patch id per patch required")
        if len(np.unique(self.patch_ids)) != len(self.patch_ids):
            raise DuplicatePatch("patch ids must be unique")

    @property
    def n_patches(self) -> int:
        return self.samples.shape[0]

    @property
    def n_frames(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps


@dataclass
class ThermalTraceSet:
    """Per-ROI temperature traces in degrees Celsius.

    ``samples`` has shape ``(n_rois, n_frames)``. ROIs whose dropped frames
    could not be repaired are listed in ``invalid_rois`` and left out of
    ``roi_ids``/``samples``.
    """

    fps: float
    roi_ids: np.ndarray
    samples: np.ndarray
    invalid_rois: tuple = ()

    def __post_init__(self):
        self.roi_ids = np.asarray(self.roi_ids, dtype=np.int64)
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if not self.fps > 0:
            raise NonPositiveFps(f"fps must be positive, got {self.fps}")
        if len(self.roi_ids) != self.samples.shape[0]:
            raise ValueError("one roi id per trace required")
        if len(np.unique(self.roi_ids)) != len(self.roi_ids):
            raise DuplicateRoi("roi ids must be unique")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("temperatures must be finite")

    @property
    def n_frames(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps

    def trace(self, roi_id: int) -> np.ndarray:
        idx = np.flatnonzero(self.roi_ids == roi_id)
        if not len(idx):
            raise KeyError(roi_id)
        return self.samples[idx[0]]


@dataclass
class EcgTrace:
    fs: float
    samples: np.ndarray
    start_s: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not self.fs > 0:
            raise NonPositiveFps(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("ECG samples must be finite")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.fs

    @property
    def times_s(self) -> np.ndarray:
        return self.start_s + np.arange(len(self.samples)) / self.fs


@dataclass
class SessionManifest:
    session_id: str
    condition_label: str
    rgb_path: Path
    thermal_path: Path
    ecg_path: Optional[Path] = None
    source: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self):
        if self.condition_label not in CONDITION_LABELS:
            raise ManifestError(
                f"condition_label must be one of {CONDITION_LABELS}, "
                f"got {self.condition_label!r}")


# -- helpers ---------------------------------------------------------------

def _read_fps_header(fh, path) -> float:
    first = fh.readline()
    text = first.strip()
    if not text.startswith("#") or "fps=" not in text:
        raise MalformedRow(f"{path}: first line must be '# fps=<float>'")
    try:
        fps = float(text.split("fps=", 1)[1])
    except ValueError as exc:
        raise MalformedRow(f"{path}: unreadable fps header {text!r}") from exc
    if not fps > 0:
        raise NonPositiveFps(f"{path}: fps must be positive, got {fps}")
    return fps


def _data_rows(fh, path, columns):
    reader = csv.reader(fh)
    header_seen = False
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        if not header_seen and tuple(c.strip() for c in row) == columns:
            header_seen = True
            continue
        if len(row) != len(columns):
            raise MalformedRow(
                f"{path}:{lineno}: expected {len(columns)} columns, got {len(row)}")
        yield lineno, row


def _parse_int(value, path, lineno):
    try:
        f = float(value)
    except ValueError as exc:
        raise MalformedRow(f"{path}:{lineno}: non-numeric value {value!r}") from exc
    if not np.isfinite(f) or f != int(f):
        raise MalformedRow(f"{path}:{lineno}: expected an integer, got {value!r}")
    return int(f)


def _parse_float(value, path, lineno):
    try:
        return float(value)
    except ValueError as exc:
        raise MalformedRow(f"{path}:{lineno}: non-numeric value {value!r}") from exc


def _fmt(x: float) -> str:
    return "%.17g" % x


# -- RGB -------------------------------------------------------------------

def load_rgb_traces(path) -> RgbPatchTraceSet:
    """Load an RGB patch-trace CSV.

    Rows may appear in any order; they are normalised to (frame_index,
    patch_id) order. Intensities whose maximum is at most 1.5 are taken as
    already in [0, 1], otherwise they are divided by 255.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        fps = _read_fps_header(fh, path)
        records = {}
        for lineno, row in _data_rows(fh, path, RGB_COLUMNS):
            frame = _parse_int(row[0], path, lineno)
            patch = _parse_int(row[1], path, lineno)
            rgb = [_parse_float(v, path, lineno) for v in row[2:]]
            if not all(np.isfinite(rgb)):
                raise MalformedRow(f"{path}:{lineno}: non-finite intensity")
            per_patch = records.setdefault(patch, {})
            if frame in per_patch:
                raise DuplicatePatch(
                    f"{path}:{lineno}: patch {patch} repeated at frame {frame}")
            per_patch[frame] = rgb
    if not records:
        raise EmptyTrace(f"{path}: no data rows")

    patch_ids = sorted(records)
    lengths = {p: len(records[p]) for p in patch_ids}
    if len(set(lengths.values())) != 1:
        raise InconsistentPatchLength(f"{path}: samples per patch differ: {lengths}")
    frames = sorted(records[patch_ids[0]])
    for p in patch_ids[1:]:
        if sorted(records[p]) != frames:
            raise InconsistentPatchLength(f"{path}: patch {p} covers different frames")

    samples = np.array([[records[p][f] for f in frames] for p in patch_ids],
                       dtype=np.float64)
    if samples.max() > UNIT_SCALE_LIMIT:
        samples = samples / 255.0
    return RgbPatchTraceSet(fps=fps, patch_ids=np.array(patch_ids), samples=samples)


def write_rgb_traces(traces: RgbPatchTraceSet, path) -> None:
    """Write traces in canonical form (intensities on the [0, 1] scale)."""
    path = Path(path)
    lines = [f"# fps={_fmt(traces.fps)}", ",".join(RGB_COLUMNS)]
    for f in range(traces.n_frames):
        for k, pid in enumerate(traces.patch_ids):
            r, g, b = traces.samples[k, f]
            lines.append(f"{f},{pid},{_fmt(r)},{_fmt(g)},{_fmt(b)}")
    path.write_text("\n".join(lines) + "\n")


# -- thermal ---------------------------------------------------------------

def load_thermal_traces(path, max_gap_s: float = MAX_THERMAL_GAP_S) -> ThermalTraceSet:
    """Load a thermal ROI CSV.

    Frames missing for an ROI (dropped samples, or rows whose temperature is
    empty/NaN) are linearly interpolated when the gap is at most
    ``max_gap_s`` seconds; otherwise the ROI is marked invalid.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        fps = _read_fps_header(fh, path)
        records = {}
        for lineno, row in _data_rows(fh, path, THERMAL_COLUMNS):
            frame = _parse_int(row[0], path, lineno)
            roi = _parse_int(row[1], path, lineno)
            raw = row[2].strip()
            temp = float("nan") if raw == "" else _parse_float(raw, path, lineno)
            if np.isinf(temp):
                raise MalformedRow(f"{path}:{lineno}: infinite temperature")
            per_roi = records.setdefault(roi, {})
            if frame in per_roi:
                raise DuplicateRoi(f"{path}:{lineno}: roi {roi} repeated at frame {frame}")
            per_roi[frame] = temp
    if not records:
        raise EmptyTrace(f"{path}: no data rows")

    all_frames = set()
    for per_roi in records.values():
        all_frames.update(per_roi)
    grid = np.arange(min(all_frames), max(all_frames) + 1)

    roi_ids, rows, invalid = [], [], []
    for roi in sorted(records):
        items = sorted((f, t) for f, t in records[roi].items() if np.isfinite(t))
        if len(items) < 2:
            invalid.append(roi)
            continue
        frames = np.array([f for f, _ in items], dtype=np.int64)
        temps = np.array([t for _, t in items])
        # leading/trailing losses count as gaps too
        padded = np.concatenate(([grid[0] - 1], frames, [grid[-1] + 1]))
        longest = np.max(np.diff(padded)) - 1
        if longest > max_gap_s * fps:
            invalid.append(roi)
            continue
        roi_ids.append(roi)
        rows.append(temps if len(frames) == len(grid) else np.interp(grid, frames, temps))

    samples = np.array(rows) if rows else np.empty((0, len(grid)))
    return ThermalTraceSet(fps=fps, roi_ids=np.array(roi_ids, dtype=np.int64),
                           samples=samples, invalid_rois=tuple(invalid))


def write_thermal_traces(traces: ThermalTraceSet, path) -> None:
    path = Path(path)
    lines = [f"# fps={_fmt(traces.fps)}", ",".join(THERMAL_COLUMNS)]
    for f in range(traces.n_frames):
        for k, rid in enumerate(traces.roi_ids):
            lines.append(f"{f},{rid},{_fmt(traces.samples[k, f])}")
    path.write_text("\n".join(lines) + "\n")


# -- ECG -------------------------------------------------------------------

def load_ecg(path) -> EcgTrace:
    """Load a ``time_s,value`` CSV; the sampling rate is inferred from the
    median time step and rejected if any step deviates from it by more than
    1 %."""
    path = Path(path)
    times, values = [], []
    with open(path, newline="") as fh:
        for lineno, row in _data_rows(fh, path, ECG_COLUMNS):
            times.append(_parse_float(row[0], path, lineno))
            values.append(_parse_float(row[1], path, lineno))
    if len(times) < 2:
        raise EmptyTrace(f"{path}: need at least two samples")
    t = np.array(times)
    v = np.array(values)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise MalformedRow(f"{path}: non-finite time or value")
    steps = np.diff(t)
    if np.any(steps <= 0):
        bad = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise NonMonotoneTime(f"{path}: time does not increase at sample {bad}")
    step = float(np.median(steps))
    if np.any(np.abs(steps - step) > ECG_STEP_TOLERANCE * step):
        raise IrregularSampling(f"{path}: time steps vary by more than 1%")
    # snap away the last-digit noise of decimal timestamps
    fs = float(np.round(1.0 / step, 6))
    return EcgTrace(fs=fs, samples=v, start_s=float(t[0]))


def write_ecg(trace: EcgTrace, path) -> None:
    path = Path(path)
    t = trace.times_s
    lines = [",".join(ECG_COLUMNS)]
    lines.extend(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(t, trace.samples))
    path.write_text("\n".join(lines) + "\n")


# -- manifests -------------------------------------------------------------

def load_manifest(path, check_files: bool = True) -> SessionManifest:
    """Read a session manifest and check the referenced files exist."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    missing = [k for k in ("session_id", "condition_label", "rgb_path", "thermal_path")
               if data.get(k) is None]
    if missing:
        raise ManifestError(f"{path}: missing fields {missing}")
    base = path.parent

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    manifest = SessionManifest(
        session_id=str(data["session_id"]),
        condition_label=data["condition_label"],
        rgb_path=resolve(data["rgb_path"]),
        thermal_path=resolve(data["thermal_path"]),
        ecg_path=resolve(data.get("ecg_path")),
        source=path,
    )
    if check_files:
        for p in (manifest.rgb_path, manifest.thermal_path, manifest.ecg_path):
            if p is not None and not p.is_file():
                raise ManifestError(f"{path}: referenced file {p} does not exist")
    return manifest


def write_manifest(manifest: SessionManifest, path) -> None:
    path = Path(path)
    base = path.parent

    def rel(p):
        if p is None:
            return None
        try:
            return os.path.relpath(p, base)
        except ValueError:
            return str(p)

    data = {
        "session_id": manifest.session_id,
        "condition_label": manifest.condition_label,
        "rgb_path": rel(manifest.rgb_path),
        "thermal_path": rel(manifest.thermal_path),
        "ecg_path": rel(manifest.ecg_path),
    }
    path.write_text(json.dumps(data, indent=2) + "\n")


def load_manifests(paths: Iterable) -> list:
    """Load several manifests, sorted by session id."""
    out = [load_manifest(p) for p in paths]
    return sorted(out, key=lambda m: m.session_id)
