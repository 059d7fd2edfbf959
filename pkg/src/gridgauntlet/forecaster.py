"""Recurrent demand forecaster: a single tanh cell trained by MSE.

The network reads H+1 hourly steps of (demand, temperature, extras) in
normalized units and emits the next hour's demand from the final hidden
state.  Training is plain gradient descent with global-norm clipping;
full-batch by default so runs are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data_ingest import Normalizer, apply_normalizer


class TrainingError(RuntimeError):
    """Loss became non-finite during training."""


@dataclass
class ModelParams:
    w_in: np.ndarray   # (d_in, h)
    w_hh: np.ndarray   # (h, h)
    b_h: np.ndarray    # (h,)
    w_out: np.ndarray  # (h, 1)
    b_out: np.ndarray  # (1,)

    @property
    def hidden_size(self):
        return self.w_hh.shape[0]

    @property
    def input_dim(self):
        return self.w_in.shape[0]

    def copy(self):
        return ModelParams(*(a.copy() for a in self.arrays()))

    def arrays(self):
        return [self.w_in, self.w_hh, self.b_h, self.w_out, self.b_out]

    def validate(self):
        h = self.hidden_size
        assert self.w_in.shape[1] == h and self.b_h.shape == (h,)
        assert self.w_out.shape == (h, 1) and self.b_out.shape == (1,)
        for a in self.arrays():
            if not np.all(np.isfinite(a)):
                raise ad.NumericError("non-finite model parameter")


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-2
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    hidden_size: int = 32
    clip_norm: float = 5.0

    def validate(self):
        if self.epochs < 1 or self.learning_rate <= 0 or self.hidden_size < 1:
            raise ValueError(f"invalid train config: {self}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"invalid batch size: {self.batch_size}")
        if self.clip_norm <= 0:
            raise ValueError(f"invalid clip norm: {self.clip_norm}")


def init_params(input_dim, hidden_size, seed=0):
    rng = np.random.default_rng(seed)
    s_in = 1.0 / np.sqrt(input_dim)
    s_h = 1.0 / np.sqrt(hidden_size)
    return ModelParams(
        w_in=rng.uniform(-s_in, s_in, size=(input_dim, hidden_size)),
        w_hh=rng.uniform(-s_h, s_h, size=(hidden_size, hidden_size)),
        b_h=np.zeros(hidden_size),
        w_out=rng.uniform(-s_h, s_h, size=(hidden_size, 1)),
        b_out=np.zeros(1),
    )


def mse(pred, actual):
    d = float(pred) - float(actual)
    return d * d


def mape(pred, actual):
    actual = float(actual)
    if actual == 0.0:
        raise ValueError("MAPE undefined for zero actual value")
    return 100.0 * abs(float(pred) - actual) / abs(actual)


def _stack_windows(windows, norm):
    """Stack normalized window arrays: (n, H+1), (n, H+1), (n, H+1, d_E), (n, 1)."""
    normed = [apply_normalizer(w, norm) for w in windows]
    xd = np.stack([w.history_demand for w in normed])
    xt = np.stack([w.history_temperature for w in normed])
    xe = np.stack([w.history_extras for w in normed])
    y = np.array([[w.target_demand] for w in normed])
    return xd, xt, xe, y


def _forward_batch(params_t, xd, xt, xe):
    """Batched forward with constant inputs; returns (n, 1) prediction tensor."""
    w_in, w_hh, b_h, w_out, b_out = params_t
    n, steps = xd.shape
    h = ad.Tensor(np.zeros((n, w_hh.data.shape[0])))
    for i in range(steps):
        x_i = ad.Tensor(np.concatenate([xd[:, i:i + 1], xt[:, i:i + 1], xe[:, i, :]], axis=1))
        pre = ad.add(ad.add(ad.matmul(x_i, w_in), ad.matmul(h, w_hh)), b_h)
        h = ad.tanh(pre)
    return ad.add(ad.matmul(h, w_out), b_out)


def forward_window(params, d_hist, t_hist, extras, requires_input_grad=False,
                   params_as_leaves=False):
    """Single-window forward in normalized units.

    Returns (pred_tensor, demand_leaf, temp_leaf, param_leaves); the leaves
    carry gradients after ``ad.backward`` when marked.
    """
    steps = d_hist.shape[0]
    d_e = extras.shape[1]
    d = ad.Tensor(np.asarray(d_hist).reshape(steps, 1), requires_grad=requires_input_grad)
    t = ad.Tensor(np.asarray(t_hist).reshape(steps, 1), requires_grad=requires_input_grad)

    w_in = ad.Tensor(params.w_in, requires_grad=params_as_leaves)
    w_hh = ad.Tensor(params.w_hh, requires_grad=params_as_leaves)
    b_h = ad.Tensor(params.b_h, requires_grad=params_as_leaves)
    w_out = ad.Tensor(params.w_out, requires_grad=params_as_leaves)
    b_out = ad.Tensor(params.b_out, requires_grad=params_as_leaves)

    w_d = ad.slice_rows(w_in, 0, 1)
    w_t = ad.slice_rows(w_in, 1, 2)
    w_e = ad.slice_rows(w_in, 2, 2 + d_e)

    h = ad.Tensor(np.zeros((1, params.hidden_size)))
    for i in range(steps):
        d_i = ad.slice_rows(d, i, i + 1)
        t_i = ad.slice_rows(t, i, i + 1)
        e_i = ad.Tensor(extras[i:i + 1, :])
        pre = ad.matmul(d_i, w_d)
        pre = ad.add(pre, ad.matmul(t_i, w_t))
        pre = ad.add(pre, ad.matmul(e_i, w_e))
        pre = ad.add(pre, ad.matmul(h, w_hh))
        pre = ad.add(pre, b_h)
        h = ad.tanh(pre)
    pred = ad.add(ad.matmul(h, w_out), b_out)
    return pred, d, t, (w_in, w_hh, b_h, w_out, b_out)


def predict(params, window, norm):
    """Next-hour demand in MW for one window; pure and deterministic."""
    w = apply_normalizer(window, norm)
    pred, _, _, _ = forward_window(params, w.history_demand, w.history_temperature,
                                   w.history_extras)
    out = float(norm.denormalize_demand(pred.item()))
    if not np.isfinite(out):
        raise ad.NumericError("non-finite prediction")
    return out


def train(windows, config, norm):
    """Gradient-descent training on normalized windows.

    Returns (params, loss_history); history has one normalized-MSE entry per
    epoch, measured on the full training set before each update sweep.
    """
    if not windows:
        raise ValueError("need at least one training window")
    config.validate()
    d_e = windows[0].history_extras.shape[1]
    params = init_params(2 + d_e, config.hidden_size, seed=config.seed)
    xd, xt, xe, y = _stack_windows(windows, norm)
    n = xd.shape[0]
    rng = np.random.default_rng(config.seed)

    history = []
    for epoch in range(config.epochs):
        if config.batch_size is None or config.batch_size >= n:
            batches = [np.arange(n)]
        else:
            order = rng.permutation(n)
            batches = [order[i:i + config.batch_size] for i in range(0, n, config.batch_size)]

        epoch_loss = None
        for idx in batches:
            leaves = tuple(ad.Tensor(a, requires_grad=True) for a in params.arrays())
            pred = _forward_batch(leaves, xd[idx], xt[idx], xe[idx])
            loss = ad.reduce_mean(ad.square(ad.sub(pred, ad.Tensor(y[idx]))))
            loss_val = loss.item()
            if not np.isfinite(loss_val):
                raise TrainingError(f"training diverged at epoch {epoch}: loss={loss_val}")
            if epoch_loss is None:
                epoch_loss = loss_val  # first (or only) batch of the epoch
            try:
                grads = ad.backward(loss, leaves=leaves)
            except ad.NumericError as exc:
                raise TrainingError(f"training diverged at epoch {epoch}: {exc}") from exc
            total_norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if not np.isfinite(total_norm):
                raise TrainingError(
                    f"training diverged at epoch {epoch}: gradient norm={total_norm}")
            clip = min(1.0, config.clip_norm / total_norm) if total_norm > 0 else 1.0
            arrays = params.arrays()
            for a, g in zip(arrays, grads):
                a -= config.learning_rate * clip * g
        history.append(epoch_loss)

    params.validate()
    return params, history


def evaluate(params, windows, norm):
    """Mean MAPE (%) and per-window forecasts over a window set."""
    preds = [predict(params, w, norm) for w in windows]
    mapes = [mape(p, w.target_demand) for p, w in zip(preds, windows)]
    return float(np.mean(mapes)), preds


# --- checkpoint serialization -------------------------------------------------

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is malformed or has an unknown version."""


def _array_to_json(a):
    return {"shape": list(a.shape), "values": np.asarray(a).reshape(-1).tolist()}


def _array_from_json(d):
    return np.array(d["values"], dtype=np.float64).reshape(d["shape"])


def save_checkpoint(path, params, norm, history_hours):
    payload = {
        "version": CHECKPOINT_VERSION,
        "history_hours": int(history_hours),
        "params": {
            "w_in": _array_to_json(params.w_in),
            "w_hh": _array_to_json(params.w_hh),
            "b_h": _array_to_json(params.b_h),
            "w_out": _array_to_json(params.w_out),
            "b_out": _array_to_json(params.b_out),
        },
        "normalizer": {
            "demand_mean": norm.demand_mean,
            "demand_std": norm.demand_std,
            "temp_mean": norm.temp_mean,
            "temp_std": norm.temp_std,
            "extras_mean": _array_to_json(norm.extras_mean),
            "extras_std": _array_to_json(norm.extras_std),
        },
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)
    return path


def load_checkpoint(path):
    """Returns (params, normalizer, history_hours)."""
    try:
        with open(path) as f:
            payload = json.load(f)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version: {payload.get('version')}")
        p = payload["params"]
        params = ModelParams(
            w_in=_array_from_json(p["w_in"]),
            w_hh=_array_from_json(p["w_hh"]),
            b_h=_array_from_json(p["b_h"]),
            w_out=_array_from_json(p["w_out"]),
            b_out=_array_from_json(p["b_out"]),
        )
        nz = payload["normalizer"]
        norm = Normalizer(
            demand_mean=nz["demand_mean"],
            demand_std=nz["demand_std"],
            temp_mean=nz["temp_mean"],
            temp_std=nz["temp_std"],
            extras_mean=_array_from_json(nz["extras_mean"]),
            extras_std=_array_from_json(nz["extras_std"]),
        )
        return params, norm, payload["history_hours"]
    except (KeyError, json.JSONDecodeError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
