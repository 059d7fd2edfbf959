"""Command-line entry points: train, attack, simulate, analyze, sweep, validate.

Stages compose through files.  A sweep builds one results tree: a single
trained model, one attack trace per attack strength, and one cell directory
per (eps, penetration coefficient, battery size) combination.  Cells already
marked done in the manifest are skipped on re-run, so interrupted sweeps
resume where they stopped.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys

from . import adversary, dispatch, pipeline
from .forecaster import CheckpointError, load_checkpoint

log = logging.getLogger("gridgauntlet")


def _setup_logging():
    level = os.environ.get("GRIDGAUNTLET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(args, **overrides):
    merged = {}
    if getattr(args, "seed", None) is not None:
        merged["seed"] = args.seed
    merged.update(overrides)
    return pipeline.load_config(args.config, overrides=merged)


def cmd_train(args):
    cfg = _load_config(args)
    out = args.out or cfg["output_dir"]
    model_path, metrics = pipeline.stage_train(cfg, out)
    pipeline.save_config(cfg, os.path.join(out, "resolved_config.yaml"))
    print(f"checkpoint: {model_path}")
    print(f"test MAPE: {metrics['test_mape_percent']:.3f}%")
    return 0


def cmd_attack(args):
    cfg = _load_config(args)
    out = args.out or os.path.join(cfg["output_dir"], "trace.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    records = pipeline.stage_attack(cfg, args.checkpoint, out, eps_override=args.eps)
    mean_clean = sum(r.mape_clean for r in records) / len(records)
    mean_att = sum(r.mape_attacked for r in records) / len(records)
    print(f"trace: {out} ({len(records)} windows)")
    print(f"mean MAPE clean {mean_clean:.3f}% -> attacked {mean_att:.3f}%")
    return 0


def cmd_simulate(args):
    cfg = _load_config(args)
    out = args.out or os.path.join(cfg["output_dir"], "sim")
    pipeline.stage_simulate(cfg, args.trace, out,
                            joint_coeff=args.penetration_coeff,
                            battery_mwh=args.battery_mwh)
    print(f"settlements written to {out}")
    return 0


def cmd_analyze(args):
    cfg = _load_config(args)
    out = args.out or os.path.join(cfg["output_dir"], "analysis")
    summary = pipeline.stage_analyze(cfg, args.sim_dir, out, compare_dir=args.compare)
    print(f"analysis written to {out}")
    print(json.dumps(summary["counts"], sort_keys=True))
    return 0


def _cell_name(eps, coeff, batt):
    return f"eps{eps:g}_coeff{coeff:g}_batt{batt:g}"


def _write_manifest(path, manifest):
    with open(path, "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)


def _run_cell(cfg, out, trace_path, eps, coeff, batt):
    name = _cell_name(eps, coeff, batt)
    cell_dir = os.path.join(out, "cells", name)
    pipeline.stage_simulate(cfg, trace_path, cell_dir,
                            joint_coeff=coeff, battery_mwh=batt)
    pipeline.stage_analyze(cfg, cell_dir, cell_dir)
    return name


def cmd_sweep(args):
    cfg = _load_config(args)
    out = args.out or cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    sweep = cfg["sweep"]
    eps_list = [float(e) for e in sweep["eps_list"]]
    coeffs = [float(c) for c in sweep["penetration_coeffs"]]
    batteries = [float(b) for b in sweep["battery_mwh_list"]]
    jobs = int(args.jobs if args.jobs is not None else sweep.get("jobs", 1))

    pipeline.save_config(cfg, os.path.join(out, "resolved_config.yaml"))

    manifest_path = os.path.join(out, "manifest.json")
    manifest = {"cells": {}}
    if os.path.exists(manifest_path):
        with open(manifest_path) as f:
            manifest = json.load(f)
    for eps in eps_list:
        for coeff in coeffs:
            for batt in batteries:
                manifest["cells"].setdefault(_cell_name(eps, coeff, batt), "pending")
    _write_manifest(manifest_path, manifest)

    model_path = os.path.join(out, "model.json")
    if not os.path.exists(model_path):
        pipeline.stage_train(cfg, out)
        log.info("trained model -> %s", model_path)

    trace_dir = os.path.join(out, "traces")
    os.makedirs(trace_dir, exist_ok=True)
    traces = {}
    for eps in eps_list:
        trace_path = os.path.join(trace_dir, f"trace_eps{eps:g}.csv")
        if not os.path.exists(trace_path):
            pipeline.stage_attack(cfg, model_path, trace_path, eps_override=eps)
            log.info("attack eps=%g -> %s", eps, trace_path)
        traces[eps] = trace_path

    todo = []
    for eps in eps_list:
        for coeff in coeffs:
            for batt in batteries:
                name = _cell_name(eps, coeff, batt)
                done_marker = os.path.join(out, "cells", name, "summary.json")
                if manifest["cells"].get(name) == "done" and os.path.exists(done_marker):
                    continue
                todo.append((eps, coeff, batt))

    if jobs > 1 and len(todo) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_cell, cfg, out, traces[eps], eps, coeff, batt):
                       (eps, coeff, batt) for eps, coeff, batt in todo}
            for fut in concurrent.futures.as_completed(futures):
                name = fut.result()
                manifest["cells"][name] = "done"
                _write_manifest(manifest_path, manifest)
    else:
        for eps, coeff, batt in todo:
            name = _run_cell(cfg, out, traces[eps], eps, coeff, batt)
            manifest["cells"][name] = "done"
            _write_manifest(manifest_path, manifest)

    print(f"sweep complete: {len(manifest['cells'])} cells in {out}")
    return 0


def _validate_dir(cfg, root):
    """Schema-check every recognized output file under ``root``."""
    problems = []
    fleet = pipeline.fleet_from_config(cfg)
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            try:
                if name == "model.json":
                    load_checkpoint(path)
                elif name == "metrics.json":
                    with open(path) as f:
                        metrics = json.load(f)
                    for key in ("final_train_mse", "test_mape_percent"):
                        if key not in metrics:
                            raise ValueError(f"missing key {key}")
                elif name.startswith("trace") and name.endswith(".csv"):
                    adversary.read_trace(path)
                elif name.startswith("settle") and name.endswith(".csv"):
                    dispatch.read_settlements(path, fleet)
                elif name == "summary.json":
                    with open(path) as f:
                        summary = json.load(f)
                    for key in ("counts", "totals"):
                        if key not in summary:
                            raise ValueError(f"missing key {key}")
                elif name == "manifest.json":
                    with open(path) as f:
                        manifest = json.load(f)
                    if "cells" not in manifest:
                        raise ValueError("missing key cells")
                elif name == "ratios.csv":
                    with open(path) as f:
                        header = f.readline().strip().split(",")
                    if header[:4] != ["hour_index", "month", "day", "hour_of_day"]:
                        raise ValueError(f"unexpected header {header}")
                elif name == "heatmap.csv":
                    with open(path) as f:
                        header = f.readline().strip().split(",")
                    if header[0] != "day" or len(header) != 25:
                        raise ValueError(f"unexpected header {header}")
            except (ValueError, CheckpointError, json.JSONDecodeError) as exc:
                problems.append(f"{path}: {exc}")
    return problems


def cmd_validate(args):
    cfg = _load_config(args)
    root = args.dir or cfg["output_dir"]
    if not os.path.isdir(root):
        print(f"not a directory: {root}", file=sys.stderr)
        return 1
    problems = _validate_dir(cfg, root)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    print(f"validate: all recognized files under {root} are well formed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gridgauntlet",
        description="Adversarial load-forecast attacks, dispatch cost impact, "
                    "and battery defense.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--out", help="output path or directory")
        p.add_argument("--seed", type=int, help="global seed override")

    p = sub.add_parser("train", help="train the forecaster")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack held-out windows with PGD")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eps", type=float, help="override both attack epsilons")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="settle a traced horizon")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--battery-mwh", type=float, dest="battery_mwh")
    p.add_argument("--penetration-coeff", type=float, dest="penetration_coeff")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="cost-loss ratios and hour taxonomy")
    common(p)
    p.add_argument("--sim-dir", required=True, help="directory produced by simulate")
    p.add_argument("--compare", help="second simulate directory (penetration comparison)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="full grid over eps x penetration x battery")
    common(p)
    p.add_argument("--jobs", type=int, help="parallel cell workers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="schema-check output files")
    common(p)
    p.add_argument("--dir", help="results directory to check")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        if os.environ.get("GRIDGAUNTLET_LOG", "").upper() == "DEBUG":
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
