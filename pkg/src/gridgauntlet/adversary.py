"""White-box PGD attack on the forecaster's demand and temperature histories.

Each history element may move within a relative band around its true value
(elementwise bound eps * |value|).  Ascent steps follow the sign of the
input gradient of the forecast's percentage error; iterates are projected
back into the band after every step, and the best iterate (including the
unperturbed one) is kept.  Extras are never touched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data_ingest import ForecastWindow, apply_normalizer
from .forecaster import forward_window, mape, predict


@dataclass
class AttackBudget:
    eps_demand: float = 0.03       # relative band on demand history
    eps_temp: float = 0.03         # relative band on temperature history
    step_size: float | None = None  # normalized units; None = band radius / 10 per element
    iterations: int = 20
    random_start: bool = False
    seed: int = 0

    def validate(self):
        if self.eps_demand < 0 or self.eps_temp < 0:
            raise ValueError(f"epsilons must be >= 0: {self.eps_demand}, {self.eps_temp}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1: {self.iterations}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError(f"step size must be positive: {self.step_size}")


@dataclass
class AttackedWindow:
    perturbed_demand: np.ndarray       # (H+1,) MW
    perturbed_temperature: np.ndarray  # (H+1,) degrees C
    original: ForecastWindow
    achieved_mape: float
    forecast_clean_mw: float
    forecast_attacked_mw: float


@dataclass
class AttackRecord:
    target_index: int
    actual_mw: float
    forecast_clean_mw: float
    forecast_attacked_mw: float
    mape_clean: float
    mape_attacked: float


def project_ball(candidate, center, eps):
    """Clamp each element into [c - eps*|c|, c + eps*|c|]; idempotent."""
    candidate = np.asarray(candidate, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    if candidate.shape != center.shape:
        raise ad.ShapeError(f"candidate shape {candidate.shape} != center shape {center.shape}")
    radius = eps * np.abs(center)
    return np.clip(candidate, center - radius, center + radius)


def pgd_step(current, grad, center, eps, alpha):
    """One sign-ascent step followed by projection onto the relative band."""
    current = np.asarray(current, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != current.shape:
        raise ad.ShapeError(f"gradient shape {grad.shape} != vector shape {current.shape}")
    if not np.all(np.isfinite(grad)):
        raise ad.NumericError("non-finite gradient in PGD step")
    return project_ball(current + alpha * np.sign(grad), center, eps)


def _mape_loss_tensor(pred_norm, norm, actual_mw):
    """Percentage-error loss as a tensor node, in MW terms."""
    pred_mw = ad.add(ad.scale(pred_norm, norm.demand_std),
                     ad.Tensor(np.array([[norm.demand_mean]])))
    err = ad.sub(pred_mw, ad.Tensor(np.array([[actual_mw]])))
    return ad.reduce_mean(ad.scale(ad.abs_(err), 100.0 / abs(actual_mw)))


def _evaluate_candidate(params, window, norm, d_raw, t_raw):
    cand = ForecastWindow(
        history_demand=d_raw,
        history_temperature=t_raw,
        history_extras=window.history_extras,
        target_demand=window.target_demand,
        target_index=window.target_index,
    )
    fc = predict(params, cand, norm)
    return fc, mape(fc, window.target_demand)


def attack_window(params, window, budget, norm):
    """Run PGD on one window; returns the best feasible perturbation found."""
    budget.validate()
    actual = float(window.target_demand)
    if actual == 0.0:
        raise ValueError(f"target demand is zero at index {window.target_index}; MAPE undefined")

    d0 = window.history_demand
    t0 = window.history_temperature
    clean_fc, clean_mape = _evaluate_candidate(params, window, norm, d0, t0)

    best = (clean_mape, d0.copy(), t0.copy(), clean_fc)

    # feasible band, raw units
    d_rad = budget.eps_demand * np.abs(d0)
    t_rad = budget.eps_temp * np.abs(t0)
    d_lo_raw, d_hi_raw = d0 - d_rad, d0 + d_rad
    t_lo_raw, t_hi_raw = t0 - t_rad, t0 + t_rad

    # same band mapped into normalized space (affine map, order preserved)
    d_lo = norm.normalize_demand(d_lo_raw)
    d_hi = norm.normalize_demand(d_hi_raw)
    t_lo = norm.normalize_temp(t_lo_raw)
    t_hi = norm.normalize_temp(t_hi_raw)

    if budget.step_size is None:
        alpha_d = (d_hi - d_lo) / 20.0  # band radius / 10
        alpha_t = (t_hi - t_lo) / 20.0
    else:
        alpha_d = np.full_like(d_lo, budget.step_size)
        alpha_t = np.full_like(t_lo, budget.step_size)

    x_d = norm.normalize_demand(d0)
    x_t = norm.normalize_temp(t0)
    if budget.random_start:
        rng = np.random.default_rng((budget.seed, window.target_index))
        x_d = rng.uniform(d_lo, d_hi)
        x_t = rng.uniform(t_lo, t_hi)

    extras_norm = norm.normalize_extras(window.history_extras)

    for _ in range(budget.iterations):
        pred, d_leaf, t_leaf, _ = forward_window(
            params, x_d, x_t, extras_norm, requires_input_grad=True)
        loss = _mape_loss_tensor(pred, norm, actual)
        g_d, g_t = ad.backward(loss, leaves=(d_leaf, t_leaf))

        x_d = np.clip(x_d + alpha_d * np.sign(g_d.reshape(-1)), d_lo, d_hi)
        x_t = np.clip(x_t + alpha_t * np.sign(g_t.reshape(-1)), t_lo, t_hi)

        # express in raw units and clamp exactly so feasibility is never
        # lost to the affine round trip
        d_raw = project_ball(norm.denormalize_demand(x_d), d0, budget.eps_demand)
        t_raw = project_ball(norm.denormalize_temp(x_t), t0, budget.eps_temp)
        fc, m = _evaluate_candidate(params, window, norm, d_raw, t_raw)
        if m > best[0]:
            best = (m, d_raw, t_raw, fc)

    achieved, d_best, t_best, fc_best = best
    return AttackedWindow(
        perturbed_demand=d_best,
        perturbed_temperature=t_best,
        original=window,
        achieved_mape=achieved,
        forecast_clean_mw=clean_fc,
        forecast_attacked_mw=fc_best,
    )


def attack_series(params, windows, budget, norm):
    """Attack each window independently against its own original history."""
    records = []
    for i, window in enumerate(windows):
        try:
            aw = attack_window(params, window, budget, norm)
        except Exception as exc:
            raise RuntimeError(
                f"attack failed on window {i} (target_index={window.target_index}): {exc}"
            ) from exc
        records.append(AttackRecord(
            target_index=window.target_index,
            actual_mw=float(window.target_demand),
            forecast_clean_mw=aw.forecast_clean_mw,
            forecast_attacked_mw=aw.forecast_attacked_mw,
            mape_clean=mape(aw.forecast_clean_mw, window.target_demand),
            mape_attacked=aw.achieved_mape,
        ))
    return records


TRACE_COLUMNS = ("target_index", "actual_mw", "forecast_clean_mw",
                 "forecast_attacked_mw", "mape_clean", "mape_attacked")


def write_trace(path, records):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow([r.target_index] +
                            [repr(float(v)) for v in (r.actual_mw, r.forecast_clean_mw,
                                                      r.forecast_attacked_mw, r.mape_clean,
                                                      r.mape_attacked)])
    return path


def read_trace(path):
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns in {path}: {reader.fieldnames}")
        for row in reader:
            records.append(AttackRecord(
                target_index=int(row["target_index"]),
                actual_mw=float(row["actual_mw"]),
                forecast_clean_mw=float(row["forecast_clean_mw"]),
                forecast_attacked_mw=float(row["forecast_attacked_mw"]),
                mape_clean=float(row["mape_clean"]),
                mape_attacked=float(row["mape_attacked"]),
            ))
    return records
