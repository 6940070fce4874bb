import json
import os
import shutil
import subprocess
import sys

import pytest

from vitalsig.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def test_rppg_then_hrv(tmp_path, capsys):
    assert run("synth", "--kind", "rppg", "--duration", 260, "--fps", 20, "--patches", 4,
               "--bpm", 66, "--seed", 3, "--out", tmp_path) == 0
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["truth"]["values"][0] == 66
    assert run("rppg", "--in", tmp_path / "rgb.csv", "--out", tmp_path / "hr.json") == 0
    hr = json.loads((tmp_path / "hr.json").read_text())
    assert len(hr["values"]) == 255
    assert hr["quality"] == 0.0 and not any(hr["no_pulse"])
    assert run("hrv", "--in", tmp_path / "hr.json", "--segment", "last120") == 0
    metrics = json.loads(capsys.readouterr().out)
    assert list(metrics) == ["hr", "sdnn", "rmssd", "pnn50", "ln_hf", "ln_lf", "ln_lf_hf"]
    assert metrics["hr"] == pytest.approx(66, abs=0.5)


def test_synth_ecg_and_thermal(tmp_path, capsys):
    assert run("synth", "--kind", "ecg", "--rr", "750,850", "--repeat", 5,
               "--out", tmp_path / "e") == 0
    side = json.loads((tmp_path / "e" / "truth.json").read_text())
    assert len(side["r_peak_times_s"]) == 10
    assert run("synth", "--kind", "thermal", "--duration", 240, "--out", tmp_path / "t") == 0
    assert run("thermal", "--in", tmp_path / "t" / "thermal.csv") == 0
    feats = json.loads(capsys.readouterr().out)
    step = json.loads((tmp_path / "t" / "truth.json").read_text())["step_delta_c"]
    assert feats["delta.30"] == pytest.approx(step["30"], abs=1e-9)
    assert feats["rel_forehead.58"] == 0.0


def test_train_and_explain(tmp_path):
    assert run("synth", "--kind", "dataset", "--n-per-class", 40, "--separation", 6,
               "--out", tmp_path) == 0
    ds = tmp_path / "dataset.json"
    assert run("train", "--dataset", ds, "--mode", "early", "--model", "svm",
               "--report", tmp_path / "rep.json", "--out", tmp_path / "m.json") == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["mode"] == "early_fusion" and rep["avg_accuracy"] >= 0.95
    assert run("explain", "--model", tmp_path / "m.json", "--dataset", ds,
               "--permutations", 100, "--instances", 5, "--out", tmp_path / "shap.json") == 0
    shap = json.loads((tmp_path / "shap.json").read_text())
    assert len(shap["ranking"]) == 29
    assert sum(r["top"] for r in shap["ranking"]) == 10
    assert {r["feature"] for r in shap["ranking"][:2]} == {"hr", "sdnn"}


def test_train_late_fusion(tmp_path, capsys):
    run("synth", "--kind", "dataset", "--n-per-class", 30, "--separation", 4,
        "--informative", "0,10", "--out", tmp_path)
    assert run("train", "--dataset", tmp_path / "dataset.json", "--mode", "late",
               "--model", "rf", "--grid", '{"n_trees": [10]}', "--folds", 3) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mode"] == "late_fusion" and 0 <= rep["avg_accuracy"] <= 1


def test_run_report_and_agree(tmp_path, corpus_dir, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rf_grid": {"n_trees": [20]}, "svm_grid": {"c": [1.0]},
                               "shap_permutations": 100}))
    out = tmp_path / "run"
    assert run("run", "--corpus", corpus_dir, "--config", cfg, "--out", out) == 0
    assert (out / "report.json").is_file()
    assert run("report", "--in", out) == 0
    text = capsys.readouterr().out
    assert "S04" in text and "early_fusion" in text
    assert run("agree", "--pairs", out / "pairs.json", "--thresholds", "0.3,1.0",
               "--exclude", "S01") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("threshold,r_hr")
    assert lines[-1].endswith(",6")


def test_run_without_usable_sessions(tmp_path, corpus_dir):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"quality_threshold": 0.0, "rf_grid": {"n_trees": [5]},
                               "svm_grid": {"c": [1.0]}, "shap_permutations": 100}))
    assert run("run", "--corpus", corpus_dir, "--config", cfg, "--out", tmp_path / "r") == 3


def test_errors_exit_one(tmp_path, capsys):
    bad = tmp_path / "x.csv"
    bad.write_text("nope\n")
    assert run("rppg", "--in", bad) == 1
    assert "MalformedRow" in capsys.readouterr().err
    assert run("run", "--out", tmp_path) == 1
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": 1}')
    assert run("thermal", "--in", bad, "--config", cfg) == 1


def test_missing_subcommand_args():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--dataset", "x"])
    assert exc.value.code == 2


def test_console_script(tmp_path):
    exe = shutil.which("vitalsig")
    cmd = [exe] if exe else [sys.executable, "-m", "vitalsig.cli"]
    env = dict(os.environ, VITALSIG_LOG="debug")
    proc = subprocess.run(cmd + ["synth", "--kind", "ecg", "--repeat", "15", "--out",
                                 str(tmp_path)], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ecg.csv").is_file()
