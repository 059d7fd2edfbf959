"""
Drive the full pipeline through the experiment stages: train a model,
sweep attack strength x battery size into a results tree, and read the
per-cell summaries back for a compact table.

The same tree can be produced from the shell:

    gridgauntlet sweep --config demo_config.yaml --out runs/demo
"""

import json
import os
import tempfile

import yaml

from gridgauntlet import cli


CONFIG = {
    "seed": 0,
    "history_hours": 24,
    "data": {"synthetic": {"hours": 700, "seed": 7}},
    "train": {"epochs": 80, "learning_rate": 0.05, "hidden_size": 16},
    "attack": {"iterations": 10},
    "battery": {"capacity_mwh": 16000.0},
    "sweep": {
        "eps_list": [0.0, 0.03],
        "penetration_coeffs": [1.0, 6.5],
        "battery_mwh_list": [0.0, 16000.0],
    },
}


def main():
    root = tempfile.mkdtemp(prefix="sweep_demo_")
    cfg_path = os.path.join(root, "config.yaml")
    with open(cfg_path, "w") as f:
        yaml.safe_dump(CONFIG, f)

    out = os.path.join(root, "results")
    rc = cli.main(["sweep", "--config", cfg_path, "--out", out])
    assert rc == 0
    rc = cli.main(["validate", "--config", cfg_path, "--dir", out])
    assert rc == 0

    with open(os.path.join(out, "manifest.json")) as f:
        manifest = json.load(f)

    print(f"\n{'cell':<30}{'clean total':>14}{'attacked total':>16}"
          f"{'attacked w/batt':>17}{'loss hours':>12}")
    for name in sorted(manifest["cells"]):
        with open(os.path.join(out, "cells", name, "summary.json")) as f:
            summary = json.load(f)
        loss_hours = summary["counts"]["loss"] + summary["counts"]["extremely_vulnerable"]
        t = summary["totals"]
        print(f"{name:<30}{t['clean_nobatt']:>14,.0f}{t['attacked_nobatt']:>16,.0f}"
              f"{t['attacked_batt']:>17,.0f}{loss_hours:>12}")
    print(f"\nfull results tree: {out}")


if __name__ == "__main__":
    main()
