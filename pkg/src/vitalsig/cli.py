"""Command-line front end: ``vitalsig <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import attribution, ecgref, hrv, pipeline, rppg, synthgen, thermal
from .dataio import (
    load_manifests,
    load_rgb_traces,
    load_thermal_traces,
    write_ecg,
    write_rgb_traces,
    write_thermal_traces,
)
from .errors import MissingModality, VitalsigError
from .ml import Dataset, TrainedModel, grid_search_cv, late_fuse, split_blocks
from .ml.dataset import MODE_ALIASES, RPPG_FEATURES, thermal_feature_name

log = logging.getLogger("vitalsig")
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> pipeline.PipelineConfig:
    cfg = pipeline.PipelineConfig.load(args.config) if args.config else pipeline.PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


# -- synth -------------------------------------------------------------------

def _synth(args, cfg) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed

    if args.kind == "rppg":
        spec = synthgen.SynthSpec(seed=seed, duration_s=args.duration, fps=args.fps,
                                  hr_profile=args.bpm, noise_sigma=args.noise,
                                  n_patches=args.patches, modulation_depth=args.depth)
        traces, truth = synthgen.synth_rppg(spec)
        write_rgb_traces(traces, out / "rgb.csv")
        sidecar = {"kind": "rppg", "seed": seed, "bpm": args.bpm, "fps": args.fps,
                   "noise_sigma": args.noise, "truth": truth.to_dict()}
    elif args.kind == "ecg":
        rr = [float(x) for x in args.rr.split(",")] * args.repeat
        trace, peaks = synthgen.synth_ecg(rr, fs=args.fs, noise_sigma=args.noise, seed=seed)
        write_ecg(trace, out / "ecg.csv")
        sidecar = {"kind": "ecg", "seed": seed, "fs": args.fs, "rr_ms": rr,
                   "r_peak_times_s": peaks.tolist()}
    elif args.kind == "thermal":
        rng = np.random.default_rng(seed)
        base = dict(zip(thermal.ROI_ORDER, np.round(rng.uniform(33.0, 35.5, 22), 3)))
        step = dict(zip(thermal.ROI_ORDER, np.round(rng.uniform(-0.6, 0.3, 22), 3)))
        traces = synthgen.synth_thermal(base, step, fps=1.0, duration_s=args.duration,
                                        noise_sigma=args.noise, seed=seed)
        write_thermal_traces(traces, out / "thermal.csv")
        sidecar = {"kind": "thermal", "seed": seed,
                   "baseline_c": {str(k): float(v) for k, v in base.items()},
                   "step_delta_c": {str(k): float(v) for k, v in step.items()}}
    elif args.kind == "dataset":
        d = args.features
        names = None
        if d == len(RPPG_FEATURES) + len(thermal.ROI_ORDER):
            names = list(RPPG_FEATURES) + [thermal_feature_name(r) for r in thermal.ROI_ORDER]
        informative = [int(i) for i in args.informative.split(",")] if args.informative else None
        ds = synthgen.synth_dataset(args.n_per_class, d, args.separation, seed,
                                    informative=informative, feature_names=names)
        if d > len(RPPG_FEATURES):
            ds = split_blocks(ds)
        ds.save(out / "dataset.json")
        sidecar = {"kind": "dataset", "seed": seed, "separation": args.separation,
                   "informative": np.flatnonzero(ds.informative_mask).tolist()}
    else:
        manifests = synthgen.synth_corpus(out, args.sessions, seed)
        sidecar = {"kind": "corpus", "seed": seed,
                   "manifests": [str(Path(m).relative_to(out)) for m in manifests]}
        (out / "corpus.json").write_text(json.dumps(sidecar, indent=2) + "\n")
        return 0
    (out / "truth.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return 0


# -- per-stage commands ------------------------------------------------------

def _rppg(args, cfg) -> int:
    traces = load_rgb_traces(args.input)
    hr = rppg.estimate_hr(rppg.pos_bvp(traces), cfg.window_s, cfg.hop_s)
    data = hr.to_dict()
    data["no_pulse"] = [bool(b) for b in hr.no_pulse]
    data["quality"] = float(rppg.quality_index(hr))
    _emit(pipeline.dump_json(data), args.out)
    return 0


def _hrv(args, cfg) -> int:
    hr = rppg.HrSeries.from_dict(json.loads(Path(args.input).read_text()))
    span = hr.span_s
    cleaned = rppg.clean_hr(hr, cfg.jump_bpm)
    metrics = hrv.segment_metrics(cleaned, args.segment, cfg.segment_s, span=span)
    _emit(pipeline.dump_json(metrics.to_dict()), args.out)
    return 0


def _agree(args, cfg) -> int:
    pairs = pipeline.pairs_from_json(json.loads(Path(args.pairs).read_text()))
    rows = ecgref.agreement_sweep(pairs, ecgref.parse_thresholds(args.thresholds),
                                  delta=args.delta, exclude=args.exclude)
    _emit(pipeline.dump_csv(ecgref.AGREEMENT_CSV_HEADER, [r.to_csv_row() for r in rows]),
          args.out)
    return 0


def _thermal(args, cfg) -> int:
    traces = load_thermal_traces(args.input)
    feats = thermal.thermal_features(traces, cfg.forehead_roi, cfg.segment_s)
    _emit(pipeline.dump_json(feats.to_dict()), args.out)
    return 0


def _train(args, cfg) -> int:
    ds = Dataset.load(args.dataset)
    mode = MODE_ALIASES.get(args.mode, args.mode)
    grid = json.loads(args.grid) if args.grid else (cfg.rf_grid if args.model == "rf"
                                                    else cfg.svm_grid)
    if mode == "late":
        if not all(b in ds.blocks for b in ("rppg", "thermal")):
            raise MissingModality("late fusion needs a dataset with r-PPG and thermal blocks")
        _, m_r = grid_search_cv(ds.select("rppg"), args.model, grid, args.folds, cfg.seed)
        _, m_t = grid_search_cv(ds.select("thermal"), args.model, grid, args.folds, cfg.seed)
        model, rep = late_fuse(m_r, m_t, ds, cfg.seed, args.folds)
        mode_name = "late_fusion"
    else:
        rep, model = grid_search_cv(ds.select(mode), args.model, grid, args.folds, cfg.seed)
        mode_name = mode
    model.mode = mode_name
    report = {"mode": mode_name, "model": args.model, "avg_accuracy": rep.avg_accuracy,
              "avg_f1": rep.avg_f1}
    if args.out:
        model.save(args.out)
    text = pipeline.dump_json(report)
    if args.report:
        _emit(text, args.report)
    else:
        sys.stdout.write(text)
    return 0


def _explain(args, cfg) -> int:
    model = TrainedModel.load(args.model)
    ds = Dataset.load(args.dataset)
    if ds.n_features != model.n_features and model.mode in ("rppg", "thermal"):
        ds = ds.select(model.mode)
    if ds.n_features != model.n_features:
        raise MissingModality(f"dataset width {ds.n_features} does not match the model's "
                              f"{model.n_features} features")
    if args.instances:
        ds = ds.subset(slice(0, args.instances))
    reports = attribution.explain_dataset(model, ds, args.permutations, cfg.seed)
    out = {"n_permutations": args.permutations, "n_instances": len(reports),
           "ranking": attribution.ranking_table(reports)}
    _emit(pipeline.dump_json(out), args.out)
    return 0


def _run(args, cfg) -> int:
    paths: List[Path] = [Path(p) for p in args.manifests or []]
    if args.corpus:
        paths.extend(sorted(Path(args.corpus).glob("*/manifest.json")))
    if not paths:
        raise VitalsigError("no manifests given (use --manifests or --corpus)")
    result = pipeline.run_pipeline(load_manifests(paths), cfg)
    result.write(args.out or "vitalsig-out")
    log.info("pipeline finished with exit code %d", result.exit_code)
    return result.exit_code


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.3f}"


def _report(args, cfg) -> int:
    src = Path(args.input)
    if src.is_dir():
        src = src / "report.json"
    rep = json.loads(src.read_text())
    lines = ["Sessions", ""]
    for s in rep["sessions"]:
        status = "failed" if s["session_id"] in rep["failed"] else (
            "excluded" if s["excluded"] else "ok")
        lines.append(f"  {s['session_id']}  quality {_fmt(s['quality'])}  {status}")
    ml = rep.get("ml", {})
    lines += ["", "Classification"]
    if "table" in ml:
        lines.append(f"  {'mode':<14}{'model':<7}{'accuracy':>9}{'f1':>8}")
        for r in ml["table"]:
            lines.append(f"  {r['mode']:<14}{r['model']:<7}{_fmt(r['avg_accuracy']):>9}"
                         f"{_fmt(r['avg_f1']):>8}")
        for kind, ranking in ml.get("shap", {}).items():
            top = ", ".join(r["feature"] for r in ranking if r["top"])
            lines.append(f"  top features (early fusion, {kind}): {top}")
    else:
        lines.append(f"  not run: {ml.get('error')}: {ml.get('message')}")
    if rep["errors"]:
        lines += ["", "Errors"]
        lines += [f"  {e['session_id']} [{e['stage']}] {e['error']}: {e['message']}"
                  for e in rep["errors"]]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# -- parser ------------------------------------------------------------------

def _global_flags(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="PipelineConfig JSON file")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", default=default, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vitalsig", description=__doc__)
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        _global_flags(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", _synth, "write synthetic traces, datasets or a session corpus")
    sp.add_argument("--kind", required=True,
                    choices=["rppg", "ecg", "thermal", "dataset", "corpus"])
    sp.add_argument("--duration", type=float, default=300.0)
    sp.add_argument("--fps", type=float, default=30.0)
    sp.add_argument("--bpm", type=float, default=72.0)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--depth", type=float, default=0.02, help="pulse modulation depth")
    sp.add_argument("--patches", type=int, default=16)
    sp.add_argument("--fs", type=float, default=250.0)
    sp.add_argument("--rr", default="800", help="comma-separated RR intervals (ms)")
    sp.add_argument("--repeat", type=int, default=100, help="times the RR list is repeated")
    sp.add_argument("--n-per-class", type=int, default=200)
    sp.add_argument("--features", type=int, default=29)
    sp.add_argument("--separation", type=float, default=6.0)
    sp.add_argument("--informative", default=None, help="comma-separated feature indices")
    sp.add_argument("--sessions", type=int, default=4)

    sp = add("rppg", _rppg, "RGB traces -> heart-rate series JSON")
    sp.add_argument("--in", dest="input", required=True)

    sp = add("hrv", _hrv, "heart-rate series -> segment HRV metrics")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--segment", required=True, choices=["first120", "last120"])

    sp = add("agree", _agree, "r-PPG/ECG agreement per quality threshold")
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--thresholds", default=pipeline.DEFAULT_THRESHOLDS)
    sp.add_argument("--exclude", action="append", default=[], help="session id to drop")
    sp.add_argument("--delta", action="store_true",
                    help="correlate last-minus-first differences per session")

    sp = add("thermal", _thermal, "thermal traces -> segment features")
    sp.add_argument("--in", dest="input", required=True)

    sp = add("train", _train, "grid-search, cross-validate and fit a classifier")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--mode", required=True, choices=["rppg", "thermal", "early", "late"])
    sp.add_argument("--model", required=True, choices=["rf", "svm"])
    sp.add_argument("--report", default=None, help="evaluation report JSON")
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--grid", default=None, help="grid as JSON, e.g. '{\"c\": [1, 10]}'")

    sp = add("explain", _explain, "Shapley feature ranking for a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--permutations", type=int, default=2000)
    sp.add_argument("--instances", type=int, default=None, help="explain only the first N rows")

    sp = add("run", _run, "full pipeline over session manifests")
    sp.add_argument("--manifests", nargs="*", default=None)
    sp.add_argument("--corpus", default=None, help="directory with */manifest.json")

    sp = add("report", _report, "human-readable summary of a run")
    sp.add_argument("--in", dest="input", required=True, help="run directory or report.json")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("VITALSIG_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (VitalsigError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
