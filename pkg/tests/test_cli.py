import json
import os

import pytest
import yaml

from gridgauntlet import adversary, cli


TINY_CONFIG = {
    "seed": 0,
    "history_hours": 12,
    "data": {"synthetic": {"hours": 160, "seed": 3}},
    "train": {"epochs": 15, "learning_rate": 0.05, "hidden_size": 8},
    "attack": {"iterations": 3},
    "battery": {"capacity_mwh": 2000.0},
    "sweep": {
        "eps_list": [0.0, 0.02],
        "penetration_coeffs": [1.0],
        "battery_mwh_list": [0.0, 2000.0],
    },
}


def write_config(dirpath, extra=None):
    cfg = dict(TINY_CONFIG)
    if extra:
        cfg = {**cfg, **extra}
    path = os.path.join(dirpath, "config.yaml")
    with open(path, "w") as f:
        yaml.safe_dump(cfg, f)
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """Full train -> attack -> simulate -> analyze chain in one directory."""
    root = str(tmp_path_factory.mktemp("cli_run"))
    cfg = write_config(root)
    out = os.path.join(root, "out")
    assert cli.main(["train", "--config", cfg, "--out", out]) == 0
    trace = os.path.join(out, "trace.csv")
    assert cli.main(["attack", "--config", cfg, "--out", trace,
                     "--checkpoint", os.path.join(out, "model.json")]) == 0
    sim = os.path.join(out, "sim")
    assert cli.main(["simulate", "--config", cfg, "--out", sim,
                     "--trace", trace]) == 0
    ana = os.path.join(out, "analysis")
    assert cli.main(["analyze", "--config", cfg, "--out", ana,
                     "--sim-dir", sim]) == 0
    return cfg, out


def test_train_outputs(run_dir):
    _, out = run_dir
    assert os.path.exists(os.path.join(out, "model.json"))
    with open(os.path.join(out, "metrics.json")) as f:
        metrics = json.load(f)
    assert metrics["test_mape_percent"] < 50.0
    assert metrics["train_windows"] > metrics["test_windows"]


def test_train_same_seed_byte_identical(tmp_path):
    cfg = write_config(str(tmp_path))
    a = os.path.join(str(tmp_path), "a")
    b = os.path.join(str(tmp_path), "b")
    assert cli.main(["train", "--config", cfg, "--out", a]) == 0
    assert cli.main(["train", "--config", cfg, "--out", b]) == 0
    with open(os.path.join(a, "model.json"), "rb") as f1, \
         open(os.path.join(b, "model.json"), "rb") as f2:
        assert f1.read() == f2.read()


def test_attack_zero_eps_trace_matches_clean(run_dir, tmp_path):
    cfg, out = run_dir
    trace = str(tmp_path / "trace0.csv")
    assert cli.main(["attack", "--config", cfg, "--out", trace,
                     "--checkpoint", os.path.join(out, "model.json"),
                     "--eps", "0"]) == 0
    for r in adversary.read_trace(trace):
        assert r.forecast_attacked_mw == r.forecast_clean_mw


def test_simulate_outputs_four_tables(run_dir):
    _, out = run_dir
    sim = os.path.join(out, "sim")
    for name in ("settle_clean_nobatt.csv", "settle_clean_batt.csv",
                 "settle_attacked_nobatt.csv", "settle_attacked_batt.csv"):
        assert os.path.exists(os.path.join(sim, name))


def test_simulate_zero_battery_matches_nobatt(run_dir, tmp_path):
    cfg, out = run_dir
    sim = str(tmp_path / "sim0")
    assert cli.main(["simulate", "--config", cfg, "--out", sim,
                     "--trace", os.path.join(out, "trace.csv"),
                     "--battery-mwh", "0"]) == 0
    for source in ("clean", "attacked"):
        with open(os.path.join(sim, f"settle_{source}_nobatt.csv")) as f1, \
             open(os.path.join(sim, f"settle_{source}_batt.csv")) as f2:
            assert f1.read() == f2.read()


def test_analyze_outputs(run_dir):
    _, out = run_dir
    ana = os.path.join(out, "analysis")
    for name in ("ratios.csv", "heatmap.csv", "summary.json"):
        assert os.path.exists(os.path.join(ana, name))
    with open(os.path.join(ana, "summary.json")) as f:
        summary = json.load(f)
    assert set(summary["counts"]) == {"benefit", "loss", "extremely_vulnerable", "unchanged"}
    # the attack can only raise the no-battery bill
    assert summary["totals"]["attacked_nobatt"] >= summary["totals"]["clean_nobatt"] - 1e-6
    # and the battery can only lower it
    assert summary["totals"]["attacked_batt"] <= summary["totals"]["attacked_nobatt"] + 1e-6


def test_validate_passes_on_results_tree(run_dir, capsys):
    cfg, out = run_dir
    assert cli.main(["validate", "--config", cfg, "--dir", out]) == 0
    assert "well formed" in capsys.readouterr().out


def test_validate_flags_corrupt_file(run_dir, tmp_path, capsys):
    cfg, out = run_dir
    bad = tmp_path / "broken"
    bad.mkdir()
    (bad / "metrics.json").write_text("{}")
    assert cli.main(["validate", "--config", cfg, "--dir", str(bad)]) == 1
    assert "metrics.json" in capsys.readouterr().err


def test_validate_missing_dir(run_dir, capsys):
    cfg, _ = run_dir
    assert cli.main(["validate", "--config", cfg, "--dir", "/nonexistent/xyz"]) == 1


def test_missing_data_file_is_reported(tmp_path, capsys):
    cfg = write_config(str(tmp_path), extra={
        "data": {"csv": "/nonexistent/data.csv", "synthetic": {"hours": 160, "seed": 3}}})
    rc = cli.main(["train", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "/nonexistent/data.csv" in capsys.readouterr().err


def test_missing_checkpoint_is_reported(tmp_path, capsys):
    cfg = write_config(str(tmp_path))
    rc = cli.main(["attack", "--config", cfg, "--out", str(tmp_path / "t.csv"),
                   "--checkpoint", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "nope.json" in capsys.readouterr().err


def test_unknown_command_exits_nonzero(capsys):
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_sweep_and_resume(tmp_path, capsys):
    cfg = write_config(str(tmp_path))
    out = str(tmp_path / "sweep")
    assert cli.main(["sweep", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "manifest.json")) as f:
        manifest = json.load(f)
    assert len(manifest["cells"]) == 4  # 2 eps x 1 coeff x 2 batteries
    assert all(v == "done" for v in manifest["cells"].values())

    summaries = {}
    for name in manifest["cells"]:
        p = os.path.join(out, "cells", name, "summary.json")
        assert os.path.exists(p)
        summaries[name] = os.path.getmtime(p)

    # re-run: every cell is marked done, so nothing should be rewritten
    assert cli.main(["sweep", "--config", cfg, "--out", out]) == 0
    for name, mtime in summaries.items():
        p = os.path.join(out, "cells", name, "summary.json")
        assert os.path.getmtime(p) == mtime


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write_config(str(tmp_path))
    serial = str(tmp_path / "serial")
    parallel = str(tmp_path / "parallel")
    assert cli.main(["sweep", "--config", cfg, "--out", serial]) == 0
    assert cli.main(["sweep", "--config", cfg, "--out", parallel, "--jobs", "3"]) == 0
    for dirpath, _dirs, files in os.walk(serial):
        rel = os.path.relpath(dirpath, serial)
        for name in sorted(files):
            if name == "manifest.json":
                continue  # write order differs under threads
            with open(os.path.join(serial, rel, name), "rb") as f1, \
                 open(os.path.join(parallel, rel, name), "rb") as f2:
                assert f1.read() == f2.read(), os.path.join(rel, name)
