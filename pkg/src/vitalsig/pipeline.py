"""End-to-end processing of a set of sessions into report files.

Per session: r-PPG heart rate, quality index, cleaning, segment HRV,
thermal features and (when an ECG is present) reference HRV. Across
sessions: labelled datasets, cross-validated classifiers for every
mode/model pair, segment t-tests, the HRV/thermal correlation matrix and
Shapley rankings. All outputs are plain JSON/CSV and depend only on the
inputs and the configuration.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import attribution, ecgref, hrv, rppg, stats, thermal
from .dataio import SessionManifest, load_ecg, load_rgb_traces, load_thermal_traces
from .errors import (
    ConstantInput,
    TooFewSamples,
    VitalsigError,
    ZeroVariance,
)
from .ml import SegmentRecord, assemble, grid_search_cv, late_fuse

log = logging.getLogger("vitalsig")

SEGMENTS = ("first120", "last120")
EXIT_OK, EXIT_PARTIAL, EXIT_NO_SESSIONS = 0, 2, 3
DEFAULT_THRESHOLDS = "0.30:0.48:0.02"


@dataclass
class PipelineConfig:
    window_s: float = 6.0
    hop_s: float = 1.0
    jump_bpm: float = 25.0
    quality_threshold: float = 0.42
    segment_s: float = 120.0
    forehead_roi: int = 58
    cv_folds: int = 5
    seed: int = 0
    shap_permutations: int = 500
    agreement_thresholds: str = DEFAULT_THRESHOLDS
    paired_tests: bool = True
    rf_grid: Optional[Dict[str, list]] = None
    svm_grid: Optional[Dict[str, list]] = None

    def validate(self) -> "PipelineConfig":
        for name in ("window_s", "hop_s", "jump_bpm", "segment_s", "forehead_roi", "cv_folds"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.quality_threshold <= 1.0:
            raise ValueError("quality_threshold must lie in [0, 1]")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.shap_permutations < attribution.MIN_PERMUTATIONS:
            raise ValueError(f"shap_permutations must be >= {attribution.MIN_PERMUTATIONS}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SessionResult:
    session_id: str
    condition_label: str
    quality: Optional[float] = None
    excluded: bool = False
    hrv: Dict[str, hrv.HrvMetrics] = field(default_factory=dict)
    ecg_hrv: Dict[str, hrv.HrvMetrics] = field(default_factory=dict)
    thermal: Optional[thermal.ThermalFeatures] = None
    thermal_means: Dict[str, Dict[int, float]] = field(default_factory=dict)
    errors: List[dict] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        """A required stage (r-PPG, HRV or thermal) raised."""
        return any(e["stage"] != "ecg" for e in self.errors)

    @property
    def usable(self) -> bool:
        return not self.failed and not self.excluded

    def segment_labels(self) -> Dict[str, int]:
        last = 1 if self.condition_label == "stimulated" else 0
        return {"first120": 0, "last120": last}

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "condition_label": self.condition_label,
            "quality": self.quality,
            "excluded": self.excluded,
            "hrv": {s: m.to_dict() for s, m in self.hrv.items()},
            "ecg_hrv": {s: m.to_dict() for s, m in self.ecg_hrv.items()},
            "thermal": None if self.thermal is None else self.thermal.to_dict(),
            "errors": self.errors,
        }


def _error(sid: str, stage: str, exc: Exception) -> dict:
    return {"session_id": sid, "stage": stage, "error": type(exc).__name__, "message": str(exc)}


def process_session(manifest: SessionManifest, config: PipelineConfig) -> SessionResult:
    """Run every per-session stage; failures are recorded, not raised."""
    sid = manifest.session_id
    res = SessionResult(sid, manifest.condition_label)
    span = None
    try:
        traces = load_rgb_traces(manifest.rgb_path)
        bvp = rppg.pos_bvp(traces)
        hr = rppg.estimate_hr(bvp, config.window_s, config.hop_s)
        res.quality = float(rppg.quality_index(hr))
        res.excluded = res.quality > config.quality_threshold
        span = hr.span_s
        cleaned = rppg.clean_hr(hr, config.jump_bpm)
        for seg in SEGMENTS:
            res.hrv[seg] = hrv.segment_metrics(cleaned, seg, config.segment_s, span=span)
    except VitalsigError as exc:
        res.errors.append(_error(sid, "rppg", exc))
    try:
        tr = load_thermal_traces(manifest.thermal_path)
        res.thermal = thermal.thermal_features(tr, config.forehead_roi, config.segment_s)
        first, last = thermal.segment_means(tr, config.segment_s)
        res.thermal_means = {"first120": first, "last120": last}
    except VitalsigError as exc:
        res.errors.append(_error(sid, "thermal", exc))
    if manifest.ecg_path is not None and span is not None:
        try:
            ecg = load_ecg(manifest.ecg_path)
            nn = ecgref.detect_r_peaks(ecg)
            ecg_span = (ecg.start_s, ecg.start_s + ecg.duration_s)
            for seg in SEGMENTS:
                bounds = hrv.segment_bounds(span, seg, config.segment_s)
                res.ecg_hrv[seg] = hrv.nn_segment_metrics(nn, bounds, ecg_span)
        except VitalsigError as exc:
            res.errors.append(_error(sid, "ecg", exc))
    if res.errors:
        log.info("session %s: %d error(s)", sid, len(res.errors))
    return res


# -- cross-session analyses ----------------------------------------------------

def _safe(test, *args):
    try:
        r = test(*args)
        return r.statistic, r.p_value
    except (ConstantInput, ZeroVariance, TooFewSamples):
        return float("nan"), float("nan")


def _segment_test(paired: bool):
    return stats.paired_ttest if paired else stats.ttest_ind


def hrv_ttests(results: Sequence[SessionResult], paired: bool = True) -> List[dict]:
    """Last-vs-first segment tests per HRV metric (paired by session unless
    ``paired`` is false)."""
    rows = []
    for k in hrv.METRIC_KEYS:
        a = [r.hrv["first120"].to_dict()[k] for r in results]
        b = [r.hrv["last120"].to_dict()[k] for r in results]
        t, p = _safe(_segment_test(paired), b, a)
        rows.append({"feature": k, "mean_first": float(np.mean(a)), "mean_last": float(np.mean(b)),
                     "t": t, "p": p, "n": len(a)})
    return rows


def thermal_ttests(results: Sequence[SessionResult], forehead_roi: int,
                   paired: bool = True) -> List[dict]:
    """Last-vs-first tests per ROI on absolute temperature and on
    temperature relative to the forehead."""
    test = _segment_test(paired)
    rois = list(results[0].thermal.roi_ids)
    rows = []
    for roi in rois:
        a = np.array([r.thermal_means["first120"][roi] for r in results])
        b = np.array([r.thermal_means["last120"][roi] for r in results])
        fa = np.array([r.thermal_means["first120"][forehead_roi] for r in results])
        fb = np.array([r.thermal_means["last120"][forehead_roi] for r in results])
        t_abs, p_abs = _safe(test, b, a)
        t_rel, p_rel = _safe(test, b - fb, a - fa)
        rows.append({"roi": roi, "t_abs": t_abs, "p_abs": p_abs,
                     "t_rel_forehead": t_rel, "p_rel_forehead": p_rel, "n": len(a)})
    return rows


def correlation_matrix(results: Sequence[SessionResult]):
    """Pearson r and p between each HRV delta and each ROI temperature delta.

    Returns ``(metric_keys, roi_ids, r, p)`` with matrices shaped
    ``(7, n_roi)``.
    """
    rois = list(results[0].thermal.roi_ids)
    hd = np.array([r.hrv["last120"].as_vector() - r.hrv["first120"].as_vector()
                   for r in results])
    td = np.array([[r.thermal.delta[roi] for roi in rois] for r in results])
    R = np.full((len(hrv.METRIC_KEYS), len(rois)), np.nan)
    P = np.full_like(R, np.nan)
    for i in range(R.shape[0]):
        for j in range(R.shape[1]):
            R[i, j], P[i, j] = _safe(stats.pearson, hd[:, i], td[:, j])
    return list(hrv.METRIC_KEYS), rois, R, P


def build_records(results: Sequence[SessionResult]) -> List[SegmentRecord]:
    recs = []
    for r in results:
        labels = r.segment_labels()
        for seg in SEGMENTS:
            recs.append(SegmentRecord(r.session_id, labels[seg], r.hrv[seg],
                                      r.thermal_means[seg], seg))
    return recs


def effective_folds(y, groups, requested: int) -> int:
    """Largest fold count the data allows, capped at ``requested``."""
    counts = np.bincount(np.asarray(y), minlength=2)
    k = min(requested, int(counts.min()), len(set(groups)))
    if k < 2:
        raise TooFewSamples(f"cross-validation needs >= 2 sessions and 2 rows per class; "
                            f"have {len(set(groups))} sessions, class counts {counts.tolist()}")
    return k


def run_ml(results: Sequence[SessionResult], config: PipelineConfig) -> dict:
    """Train and evaluate every mode/model pair and rank features."""
    if len(results) < 2:
        raise TooFewSamples(f"{len(results)} usable session(s); at least 2 required")
    ds = assemble(build_records(results), "early_fusion")
    k = effective_folds(ds.y, ds.session_ids, config.cv_folds)
    grids = {"rf": config.rf_grid, "svm": config.svm_grid}
    table, models = [], {}
    for mode in ("rppg", "thermal", "early_fusion"):
        data = ds.select(mode)
        for kind in ("rf", "svm"):
            rep, model = grid_search_cv(data, kind, grids[kind], k, config.seed)
            models[mode, kind] = model
            table.append({"mode": mode, "model": kind, "avg_accuracy": rep.avg_accuracy,
                          "avg_f1": rep.avg_f1, "params": rep.params,
                          "fold_accuracy": rep.fold_accuracy, "fold_f1": rep.fold_f1})
    for kind in ("rf", "svm"):
        fused, rep = late_fuse(models["rppg", kind], models["thermal", kind], ds,
                               config.seed, k)
        table.append({"mode": "late_fusion", "model": kind, "avg_accuracy": rep.avg_accuracy,
                      "avg_f1": rep.avg_f1, "params": rep.params,
                      "fold_accuracy": rep.fold_accuracy, "fold_f1": rep.fold_f1})
    rankings = {}
    for kind in ("rf", "svm"):
        reports = attribution.explain_dataset(models["early_fusion", kind], ds,
                                              config.shap_permutations, config.seed)
        rankings[kind] = attribution.ranking_table(reports)
    return {"folds": k, "n_rows": len(ds), "table": table, "shap": rankings,
            "dataset": ds.to_dict()}


def agreement(results: Sequence[SessionResult], config: PipelineConfig):
    pairs = [ecgref.PairedSample(r.session_id, r.hrv[s], r.ecg_hrv[s], r.quality, s)
             for r in results if not r.failed and r.ecg_hrv for s in SEGMENTS]
    rows = ecgref.agreement_sweep(pairs, ecgref.parse_thresholds(config.agreement_thresholds))
    return pairs, rows


# -- output --------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def dump_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def pairs_to_json(pairs: Sequence[ecgref.PairedSample]) -> list:
    return [{"session_id": p.session_id, "segment": p.segment, "quality": p.quality,
             "rppg": p.rppg.to_dict(), "ecg": p.ecg.to_dict()} for p in pairs]


def pairs_from_json(data: list) -> List[ecgref.PairedSample]:
    return [ecgref.PairedSample(d["session_id"], hrv.HrvMetrics.from_dict(d["rppg"]),
                                hrv.HrvMetrics.from_dict(d["ecg"]), float(d["quality"]),
                                d.get("segment", "")) for d in data]


@dataclass
class PipelineResult:
    files: Dict[str, str]
    exit_code: int
    report: dict

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (out / name).write_text(text)


def run_pipeline(manifests: Sequence[SessionManifest],
                 config: Optional[PipelineConfig] = None) -> PipelineResult:
    """Process every session and assemble the report files.

    The exit code is 0 when every session succeeded, 2 when some failed
    and 3 when no session is usable (failed or above the quality
    threshold).
    """
    config = (config or PipelineConfig()).validate()
    results = [process_session(m, config) for m in sorted(manifests, key=lambda m: m.session_id)]
    usable = [r for r in results if r.usable]
    errors = [e for r in results for e in r.errors]
    files: Dict[str, str] = {}
    report = {
        "config": config.to_dict(),
        "sessions": [r.to_dict() for r in results],
        "quality": {r.session_id: r.quality for r in results},
        "excluded": [r.session_id for r in results if r.excluded],
        "failed": [r.session_id for r in results if r.failed],
        "errors": errors,
    }
    files["quality.csv"] = dump_csv(
        ["session_id", "mae_over_hr", "excluded", "failed"],
        [[r.session_id, float("nan") if r.quality is None else r.quality, int(r.excluded),
          int(r.failed)] for r in results])

    analyses = {}
    if len(usable) >= 2:
        h = hrv_ttests(usable, config.paired_tests)
        files["hrv_ttests.csv"] = dump_csv(list(h[0]), [list(row.values()) for row in h])
        t = thermal_ttests(usable, config.forehead_roi, config.paired_tests)
        files["thermal_ttests.csv"] = dump_csv(list(t[0]), [list(row.values()) for row in t])
        keys, rois, R, P = correlation_matrix(usable)
        files["correlation_r.csv"] = dump_csv(["metric"] + [str(r) for r in rois],
                                              [[k] + list(R[i]) for i, k in enumerate(keys)])
        files["correlation_p.csv"] = dump_csv(["metric"] + [str(r) for r in rois],
                                              [[k] + list(P[i]) for i, k in enumerate(keys)])
        analyses = {"hrv_ttests": h, "thermal_ttests": t,
                    "correlation": {"metrics": keys, "rois": rois, "r": R.tolist(),
                                    "p": P.tolist()}}
    report["analyses"] = analyses

    try:
        ml = run_ml(usable, config)
        files["dataset.json"] = dump_json(ml.pop("dataset"))
        files["accuracy_table.csv"] = dump_csv(
            ["mode", "model", "avg_accuracy", "avg_f1"],
            [[r["mode"], r["model"], r["avg_accuracy"], r["avg_f1"]] for r in ml["table"]])
        for kind, ranking in ml["shap"].items():
            files[f"shap_early_fusion_{kind}.csv"] = dump_csv(
                ["rank", "feature", "mean_abs_phi", "top"],
                [[r["rank"], r["feature"], r["mean_abs_phi"], int(r["top"])] for r in ranking])
        report["ml"] = ml
    except VitalsigError as exc:
        report["ml"] = {"error": type(exc).__name__, "message": str(exc)}

    if any(r.ecg_hrv for r in results):
        try:
            pairs, rows = agreement(results, config)
            files["pairs.json"] = dump_json(pairs_to_json(pairs))
            files["agreement.csv"] = dump_csv(ecgref.AGREEMENT_CSV_HEADER,
                                              [row.to_csv_row() for row in rows])
            report["agreement"] = [{"threshold": r.threshold, "r": r.r, "p": r.p, "n": r.n}
                                   for r in rows]
        except VitalsigError as exc:
            report["agreement"] = {"error": type(exc).__name__, "message": str(exc)}

    if not usable:
        code = EXIT_NO_SESSIONS
    elif errors:
        code = EXIT_PARTIAL
    else:
        code = EXIT_OK
    report["exit_code"] = code
    files["report.json"] = dump_json(report)
    return PipelineResult(files=files, exit_code=code, report=report)
