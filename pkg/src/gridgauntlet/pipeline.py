"""Shared orchestration: experiment configuration and the stage functions the
CLI composes.  Stages communicate through files only, so each one is
independently runnable and testable."""

from __future__ import annotations

import copy
import json
import logging
import os
from dataclasses import dataclass

import numpy as np
import yaml

from . import adversary, analysis, dispatch, synthetic
from .data_ingest import (load_csv, make_windows, scale_renewables, split_windows,
                          fit_normalizer)
from .dispatch import BatterySpec, ThermalFleet, ThermalUnit
from .forecaster import TrainConfig, evaluate, load_checkpoint, save_checkpoint, train

log = logging.getLogger(__name__)


DEFAULT_CONFIG = {
    "seed": 0,
    "history_hours": 24,
    "output_dir": "out",
    "data": {
        "csv": None,
        "synthetic": {"hours": 700, "seed": 0, "start": "2012-09-01"},
        "solar_coeff": 1.0,
        "joint_coeff": 1.0,
    },
    "train": {
        "epochs": 150,
        "learning_rate": 0.01,
        "batch_size": None,
        "hidden_size": 16,
        "clip_norm": 5.0,
        "seed": 0,
    },
    "attack": {
        "eps_demand": 0.03,
        "eps_temp": 0.03,
        "iterations": 20,
        "step_size": None,
        "random_start": False,
        "seed": 0,
    },
    "fleet": [
        {"id": "coal", "capacity_mw": 30000.0, "marginal_cost_per_mwh": 18.0},
        {"id": "ccgt", "capacity_mw": 30000.0, "marginal_cost_per_mwh": 32.0},
        {"id": "gas", "capacity_mw": 25000.0, "marginal_cost_per_mwh": 55.0},
        {"id": "peaker", "capacity_mw": 20000.0, "marginal_cost_per_mwh": 110.0},
    ],
    "battery": {"capacity_mwh": 16000.0, "power_limit_mw": None, "efficiency": 1.0},
    "sweep": {
        "eps_list": [0.0, 0.01, 0.03, 0.05],
        "penetration_coeffs": [1.0],
        "battery_mwh_list": [0.0, 16000.0],
        "jobs": 1,
    },
}


class ConfigError(ValueError):
    pass


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides=None):
    """Merge defaults, an optional YAML file, and CLI overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as f:
            user = yaml.safe_load(f) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"config file must hold a mapping: {path}")
        cfg = _deep_merge(cfg, user)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    csv_path = cfg["data"].get("csv")
    if csv_path is not None and not os.path.exists(csv_path):
        raise ConfigError(f"data file not found: {csv_path}")
    return cfg


def save_config(cfg, path):
    with open(path, "w") as f:
        yaml.safe_dump(cfg, f, sort_keys=True)
    return path


def build_dataset(cfg, joint_coeff=None):
    """Materialize the configured dataset with renewable scaling applied."""
    data_cfg = cfg["data"]
    if data_cfg.get("csv"):
        ds = load_csv(data_cfg["csv"])
    else:
        syn = data_cfg["synthetic"]
        ds = synthetic.ercot_like(hours=syn["hours"], seed=syn["seed"],
                                  start=syn.get("start", "2012-09-01"))
    coeff = float(joint_coeff if joint_coeff is not None else data_cfg["joint_coeff"])
    return scale_renewables(ds, solar_coeff=float(data_cfg["solar_coeff"]),
                            joint_coeff=coeff)


def prepare_windows(cfg, ds):
    windows = make_windows(ds, cfg["history_hours"])
    return split_windows(windows)


def fleet_from_config(cfg):
    return ThermalFleet(ThermalUnit(id=str(u["id"]),
                                    capacity_mw=float(u["capacity_mw"]),
                                    marginal_cost=float(u["marginal_cost_per_mwh"]))
                        for u in cfg["fleet"])


def battery_from_config(cfg, capacity_override=None):
    b = cfg["battery"]
    cap = float(capacity_override if capacity_override is not None else b["capacity_mwh"])
    limit = b.get("power_limit_mw")
    return BatterySpec(capacity_mwh=cap,
                       power_limit_mw=None if limit is None else float(limit),
                       efficiency=float(b.get("efficiency", 1.0)))


def budget_from_config(cfg, eps_override=None):
    a = cfg["attack"]
    eps_d = float(eps_override if eps_override is not None else a["eps_demand"])
    eps_t = float(eps_override if eps_override is not None else a["eps_temp"])
    step = a.get("step_size")
    return adversary.AttackBudget(
        eps_demand=eps_d,
        eps_temp=eps_t,
        step_size=None if step is None else float(step),
        iterations=int(a["iterations"]),
        random_start=bool(a.get("random_start", False)),
        seed=int(a.get("seed", cfg["seed"])),
    )


def train_config_from_config(cfg):
    t = cfg["train"]
    return TrainConfig(
        epochs=int(t["epochs"]),
        learning_rate=float(t["learning_rate"]),
        batch_size=None if t.get("batch_size") is None else int(t["batch_size"]),
        seed=int(t.get("seed", cfg["seed"])),
        hidden_size=int(t["hidden_size"]),
        clip_norm=float(t["clip_norm"]),
    )


# --- stages ------------------------------------------------------------------

def stage_train(cfg, out_dir):
    """Train on the configured data; write model.json and metrics.json."""
    os.makedirs(out_dir, exist_ok=True)
    ds = build_dataset(cfg)
    train_w, test_w = prepare_windows(cfg, ds)
    norm = fit_normalizer(train_w)
    tcfg = train_config_from_config(cfg)
    params, history = train(train_w, tcfg, norm)
    test_mape, _ = evaluate(params, test_w, norm)

    model_path = os.path.join(out_dir, "model.json")
    save_checkpoint(model_path, params, norm, cfg["history_hours"])
    metrics = {
        "final_train_mse": history[-1],
        "test_mape_percent": test_mape,
        "epochs": tcfg.epochs,
        "train_windows": len(train_w),
        "test_windows": len(test_w),
    }
    with open(os.path.join(out_dir, "metrics.json"), "w") as f:
        json.dump(metrics, f, sort_keys=True, indent=2)
    return model_path, metrics


def stage_attack(cfg, checkpoint_path, out_path, eps_override=None):
    """Attack the held-out windows; write the trace CSV."""
    params, norm, history_hours = load_checkpoint(checkpoint_path)
    ds = build_dataset(cfg)
    windows = make_windows(ds, history_hours)
    _, test_w = split_windows(windows)
    budget = budget_from_config(cfg, eps_override=eps_override)
    records = adversary.attack_series(params, test_w, budget, norm)
    adversary.write_trace(out_path, records)
    return records


SETTLEMENT_FILES = {
    ("clean", False): "settle_clean_nobatt.csv",
    ("clean", True): "settle_clean_batt.csv",
    ("attacked", False): "settle_attacked_nobatt.csv",
    ("attacked", True): "settle_attacked_batt.csv",
}


def stage_simulate(cfg, trace_path, out_dir, joint_coeff=None, battery_mwh=None):
    """Settle the traced horizon under all four forecast/battery combinations."""
    os.makedirs(out_dir, exist_ok=True)
    records = adversary.read_trace(trace_path)
    ds = build_dataset(cfg, joint_coeff=joint_coeff)
    fleet = fleet_from_config(cfg)
    battery = battery_from_config(cfg, capacity_override=battery_mwh)
    no_battery = BatterySpec(capacity_mwh=0.0)

    hours = [r.target_index for r in records]
    d_series = [r.actual_mw for r in records]
    w_series = [float(ds.renewable[h]) for h in hours]
    fleet.validate_against(max(d - w for d, w in zip(d_series, w_series)) if d_series else 0.0)

    results = {}
    for source in ("clean", "attacked"):
        fd = [r.forecast_clean_mw if source == "clean" else r.forecast_attacked_mw
              for r in records]
        for with_batt, spec in ((False, no_battery), (True, battery)):
            settlements = dispatch.simulate(fleet, fd, d_series, w_series, spec, hours=hours)
            path = os.path.join(out_dir, SETTLEMENT_FILES[(source, with_batt)])
            dispatch.write_settlements(path, fleet, settlements)
            results[(source, with_batt)] = settlements
    return results


def stage_analyze(cfg, sim_dir, out_dir, compare_dir=None):
    """Cost-loss ratios, hour classes, heatmap, and a JSON summary."""
    os.makedirs(out_dir, exist_ok=True)
    fleet = fleet_from_config(cfg)
    ds = build_dataset(cfg)

    def load(sdir):
        return {key: dispatch.read_settlements(os.path.join(sdir, name), fleet)
                for key, name in SETTLEMENT_FILES.items()}

    tables = load(sim_dir)
    records = analysis.cost_loss_ratio(tables[("attacked", False)], tables[("clean", False)],
                                       timestamps=ds.timestamps)
    labeled, counts = analysis.classify_hours(records)
    analysis.write_hour_records(os.path.join(out_dir, "ratios.csv"), labeled)
    analysis.emit_heatmap(labeled, os.path.join(out_dir, "heatmap.csv"))

    summary = {
        "counts": counts,
        "totals": {
            f"{source}_{'batt' if with_batt else 'nobatt'}":
                dispatch.total_cost(table).total
            for (source, with_batt), table in tables.items()
        },
        "fit": None,
    }
    if compare_dir is not None:
        other = load(compare_dir)
        other_records = analysis.cost_loss_ratio(
            other[("attacked", False)], other[("clean", False)], timestamps=ds.timestamps)
        comparison = analysis.penetration_comparison(records, other_records)
        summary["fit"] = {
            "slope": comparison.slope,
            "intercept": comparison.intercept,
            "categories": comparison.counts,
            "mean_loss_ratio_low": comparison.mean_loss_ratio_low,
            "mean_loss_ratio_high": comparison.mean_loss_ratio_high,
        }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
    return summary
