"""Post-processing of settlement tables: cost-loss ratios, hour taxonomy,
renewable-penetration sensitivity, and attack-strength cost curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from . import adversary, dispatch


class FitError(ValueError):
    """Not enough distinct points for a least-squares fit."""


@dataclass(frozen=True)
class HourRecord:
    hour_index: int
    month: int
    day: int
    hour_of_day: int
    cost_attacked: float
    cost_clean: float
    ratio: float          # (attacked - clean) / mean hourly clean cost
    label: str | None = None


LABELS = ("benefit", "loss", "extremely_vulnerable", "unchanged")


def _check_aligned(attacked, clean):
    if len(attacked) != len(clean):
        raise dispatch.ConsistencyError(
            f"settlement sequences differ in length: {len(attacked)} vs {len(clean)}")
    for a, c in zip(attacked, clean):
        if a.hour != c.hour:
            raise dispatch.ConsistencyError(f"misaligned hours: {a.hour} vs {c.hour}")


def cost_loss_ratio(attacked, clean, timestamps=None):
    """Per-hour attack cost impact, relative to the mean hourly clean cost.

    ``timestamps`` maps hour index -> timestamp for calendar labeling; when
    omitted, hours are labeled by index arithmetic from hour 0.
    """
    _check_aligned(attacked, clean)
    mean_clean = float(np.mean([s.total_cost for s in clean]))
    if mean_clean == 0.0:
        mean_clean = 1.0  # degenerate all-zero horizon; ratios stay zero

    records = []
    for a, c in zip(attacked, clean):
        if timestamps is not None:
            ts = pd.Timestamp(timestamps[a.hour])
            month, day, hod = ts.month, ts.day, ts.hour
        else:
            month, day, hod = 1, 1 + a.hour // 24, a.hour % 24
        records.append(HourRecord(
            hour_index=a.hour,
            month=month,
            day=day,
            hour_of_day=hod,
            cost_attacked=a.total_cost,
            cost_clean=c.total_cost,
            ratio=(a.total_cost - c.total_cost) / mean_clean,
        ))
    return records


def classify_hours(records, vulnerable_threshold=None, tol=1e-6):
    """Label each record; returns (labeled records, counts per label).

    The extremely-vulnerable threshold defaults to the 95th percentile of the
    positive ratios, adapting to the scenario's scale.
    """
    if vulnerable_threshold is None:
        positive = [r.ratio for r in records if r.ratio > tol]
        vulnerable_threshold = float(np.percentile(positive, 95)) if positive else np.inf
    if vulnerable_threshold <= 0:
        raise ValueError(f"vulnerable threshold must be positive: {vulnerable_threshold}")

    labeled = []
    counts = {label: 0 for label in LABELS}
    for r in records:
        if r.ratio < -tol:
            label = "benefit"
        elif r.ratio > tol:
            label = "extremely_vulnerable" if r.ratio > vulnerable_threshold else "loss"
        else:
            label = "unchanged"
        counts[label] += 1
        labeled.append(replace(r, label=label))
    return labeled, counts


@dataclass(frozen=True)
class PenetrationComparison:
    slope: float
    intercept: float
    counts: dict  # keys: unchange, increasing, reducing
    mean_loss_ratio_low: float
    mean_loss_ratio_high: float


def penetration_comparison(records_low, records_high, tol=0.05):
    """Compare the same attacked hours at two renewable-penetration levels."""
    if len(records_low) != len(records_high):
        raise dispatch.ConsistencyError("record sets differ in length")
    for lo, hi in zip(records_low, records_high):
        if lo.hour_index != hi.hour_index:
            raise dispatch.ConsistencyError(
                f"misaligned hour indices: {lo.hour_index} vs {hi.hour_index}")

    x = np.array([r.ratio for r in records_low])
    y = np.array([r.ratio for r in records_high])
    if np.unique(x).size < 2:
        raise FitError("need at least 2 distinct low-penetration ratios for a fit")
    slope, intercept = np.polyfit(x, y, 1)

    counts = {"unchange": 0, "increasing": 0, "reducing": 0}
    for lo, hi in zip(np.abs(x), np.abs(y)):
        band = tol * max(lo, hi)
        if abs(hi - lo) <= band:
            counts["unchange"] += 1
        elif hi > lo:
            counts["increasing"] += 1
        else:
            counts["reducing"] += 1

    loss_low = x[x > 0]
    loss_high = y[x > 0]
    return PenetrationComparison(
        slope=float(slope),
        intercept=float(intercept),
        counts=counts,
        mean_loss_ratio_low=float(np.mean(loss_low)) if loss_low.size else 0.0,
        mean_loss_ratio_high=float(np.mean(loss_high)) if loss_high.size else 0.0,
    )


@dataclass(frozen=True)
class SweepPoint:
    eps: float
    cost_without_storage: float
    cost_with_storage: float


def attack_degree_sweep(params, norm, windows, renewables, fleet, battery, eps_list,
                        iterations=20, seed=0):
    """Total cost vs attack strength, with and without the battery.

    ``renewables`` holds the renewable output at each window's target hour.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps_list must not be empty")
    if sorted(eps_list) != eps_list:
        raise ValueError(f"eps_list must be sorted ascending: {eps_list}")
    if len(renewables) != len(windows):
        raise ValueError("renewables must align with windows")

    no_battery = type(battery)(capacity_mwh=0.0)
    d_series = [w.target_demand for w in windows]
    hours = [w.target_index for w in windows]

    points = []
    for eps in eps_list:
        budget = adversary.AttackBudget(eps_demand=eps, eps_temp=eps,
                                        iterations=iterations, seed=seed)
        records = adversary.attack_series(params, windows, budget, norm)
        fd = [r.forecast_attacked_mw for r in records]
        without = dispatch.total_cost(
            dispatch.simulate(fleet, fd, d_series, renewables, no_battery, hours=hours))
        with_b = dispatch.total_cost(
            dispatch.simulate(fleet, fd, d_series, renewables, battery, hours=hours))
        points.append(SweepPoint(eps=eps,
                                 cost_without_storage=without.total,
                                 cost_with_storage=with_b.total))
    return points


def emit_heatmap(records, path):
    """Day-by-hour CSV matrix of ratios; missing hours are empty cells."""
    days = []  # (month, day) in first-seen order
    seen = {}
    for r in records:
        key = (r.month, r.day)
        if key not in seen:
            seen[key] = len(days)
            days.append(key)
    grid = [[None] * 24 for _ in days]
    for r in records:
        grid[seen[(r.month, r.day)]][r.hour_of_day] = r.ratio

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["day"] + [f"h{h:02d}" for h in range(24)])
        for (month, day), row in zip(days, grid):
            writer.writerow([f"{month:02d}-{day:02d}"] +
                            ["" if v is None else repr(float(v)) for v in row])
    return path


def write_hour_records(path, records):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["hour_index", "month", "day", "hour_of_day",
                         "cost_attacked", "cost_clean", "ratio", "label"])
        for r in records:
            writer.writerow([r.hour_index, r.month, r.day, r.hour_of_day,
                             repr(float(r.cost_attacked)), repr(float(r.cost_clean)),
                             repr(float(r.ratio)),
                             r.label or ""])
    return path
