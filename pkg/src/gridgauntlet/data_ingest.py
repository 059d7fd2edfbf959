"""Hourly grid data: loading, validation, renewable scaling, windowing, normalization.

The canonical CSV schema is one row per hour:

    timestamp,demand_mw,temperature_c,wind_mw,solar_mw[,precip,air_density,cloud_cover]

Auxiliary per-hour features are built at load time: sine/cosine encodings of
hour-of-day and day-of-week, plus whichever optional weather columns the file
carries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("timestamp", "demand_mw", "temperature_c", "wind_mw", "solar_mw")
OPTIONAL_WEATHER = ("precip", "air_density", "cloud_cover")

DEFAULT_HISTORY_HOURS = 24


class SchemaError(ValueError):
    """Input file is missing required columns."""


class IntegrityError(ValueError):
    """Timestamps have gaps or duplicates."""


class SizeError(ValueError):
    """Dataset is too short for the requested operation."""


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Aligned hourly traces; immutable after construction."""

    timestamps: np.ndarray      # datetime64[s], strictly increasing, 1 h apart
    demand: np.ndarray          # MW
    temperature: np.ndarray     # degrees C
    wind: np.ndarray            # MW
    solar: np.ndarray           # MW
    extras: np.ndarray          # (n, d_E) auxiliary features
    extra_names: tuple

    def __len__(self):
        return len(self.timestamps)

    @property
    def renewable(self):
        return self.wind + self.solar


@dataclass(frozen=True)
class ForecastWindow:
    """One training/attack sample: H+1 lagged hours plus the next-hour target."""

    history_demand: np.ndarray       # (H+1,) MW
    history_temperature: np.ndarray  # (H+1,) degrees C
    history_extras: np.ndarray       # (H+1, d_E)
    target_demand: float             # MW
    target_index: int


@dataclass(frozen=True)
class Normalizer:
    """Per-channel z-score statistics fitted on the training split only."""

    demand_mean: float
    demand_std: float
    temp_mean: float
    temp_std: float
    extras_mean: np.ndarray
    extras_std: np.ndarray

    def normalize_demand(self, x):
        return (np.asarray(x, dtype=np.float64) - self.demand_mean) / self.demand_std

    def denormalize_demand(self, x):
        return np.asarray(x, dtype=np.float64) * self.demand_std + self.demand_mean

    def normalize_temp(self, x):
        return (np.asarray(x, dtype=np.float64) - self.temp_mean) / self.temp_std

    def denormalize_temp(self, x):
        return np.asarray(x, dtype=np.float64) * self.temp_std + self.temp_mean

    def normalize_extras(self, x):
        return (np.asarray(x, dtype=np.float64) - self.extras_mean) / self.extras_std


def calendar_features(timestamps):
    """Sine/cosine encodings of hour-of-day and day-of-week."""
    ts = pd.DatetimeIndex(timestamps)
    hour = ts.hour.to_numpy(dtype=np.float64)
    dow = ts.dayofweek.to_numpy(dtype=np.float64)
    two_pi = 2.0 * np.pi
    return np.column_stack([
        np.sin(two_pi * hour / 24.0),
        np.cos(two_pi * hour / 24.0),
        np.sin(two_pi * dow / 7.0),
        np.cos(two_pi * dow / 7.0),
    ])


CALENDAR_NAMES = ("hod_sin", "hod_cos", "dow_sin", "dow_cos")


def dataset_from_frame(df):
    """Validate a pandas frame with the canonical schema into a dataset."""
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"missing required columns: {missing}")

    df = df.copy()
    df["timestamp"] = pd.to_datetime(df["timestamp"])
    df = df.sort_values("timestamp").reset_index(drop=True)

    ts = df["timestamp"].to_numpy()
    deltas = np.diff(ts).astype("timedelta64[s]").astype(np.int64)
    for i, d in enumerate(deltas):
        if d != 3600:
            kind = "duplicate" if d == 0 else "gap"
            raise IntegrityError(
                f"timestamp {kind} at row {i + 1}: {df['timestamp'][i]} -> {df['timestamp'][i + 1]}"
            )

    for col in ("demand_mw", "wind_mw", "solar_mw"):
        vals = df[col].to_numpy(dtype=np.float64)
        if np.any(vals < 0):
            row = int(np.argmax(vals < 0))
            raise ValueError(f"negative {col} at row {row}: {vals[row]}")

    weather_cols = [c for c in OPTIONAL_WEATHER if c in df.columns]
    extras = calendar_features(ts)
    names = list(CALENDAR_NAMES)
    if weather_cols:
        extras = np.column_stack([extras] + [df[c].to_numpy(dtype=np.float64) for c in weather_cols])
        names.extend(weather_cols)

    return TimeSeriesDataset(
        timestamps=ts.astype("datetime64[s]"),
        demand=df["demand_mw"].to_numpy(dtype=np.float64),
        temperature=df["temperature_c"].to_numpy(dtype=np.float64),
        wind=df["wind_mw"].to_numpy(dtype=np.float64),
        solar=df["solar_mw"].to_numpy(dtype=np.float64),
        extras=extras,
        extra_names=tuple(names),
    )


def load_csv(path, schema=None):
    """Load and validate an hourly CSV.  ``schema`` maps canonical column
    names to the file's actual column names."""
    df = pd.read_csv(path)
    if schema:
        df = df.rename(columns={v: k for k, v in schema.items()})
    return dataset_from_frame(df)


def scale_renewables(ds, solar_coeff=1.0, joint_coeff=1.0):
    """solar' = solar * solar_coeff * joint_coeff; wind' = wind * joint_coeff."""
    if solar_coeff <= 0 or joint_coeff <= 0:
        raise ValueError(f"coefficients must be positive, got {solar_coeff}, {joint_coeff}")
    return replace(
        ds,
        solar=ds.solar * solar_coeff * joint_coeff,
        wind=ds.wind * joint_coeff,
    )


def penetration(ds):
    """Share of total demand covered by renewable output."""
    return float(np.sum(ds.renewable) / np.sum(ds.demand))


def make_windows(ds, history_hours=DEFAULT_HISTORY_HOURS):
    """Cut the dataset into one window per valid target index."""
    h = int(history_hours)
    if h < 1:
        raise ValueError(f"history_hours must be >= 1, got {h}")
    n = len(ds)
    if n < h + 2:
        raise SizeError(f"dataset length {n} too short for history of {h} hours (need >= {h + 2})")
    windows = []
    for target in range(h + 1, n):
        lo = target - h - 1
        windows.append(ForecastWindow(
            history_demand=ds.demand[lo:target].copy(),
            history_temperature=ds.temperature[lo:target].copy(),
            history_extras=ds.extras[lo:target].copy(),
            target_demand=float(ds.demand[target]),
            target_index=target,
        ))
    return windows


def split_windows(windows, train_fraction=2.0 / 3.0):
    """Chronological split: first ``train_fraction`` for training, rest held out."""
    cut = int(round(len(windows) * train_fraction))
    return windows[:cut], windows[cut:]


def _safe_std(values, name):
    std = float(np.std(values))
    if std <= 0.0:
        log.warning("constant feature %s: clamping std to 1", name)
        return 1.0
    return std


def fit_normalizer(train_windows):
    """Fit per-channel mean/std over the training windows' histories."""
    if not train_windows:
        raise ValueError("cannot fit a normalizer on an empty training set")
    demand = np.concatenate([w.history_demand for w in train_windows])
    temp = np.concatenate([w.history_temperature for w in train_windows])
    extras = np.concatenate([w.history_extras for w in train_windows], axis=0)

    e_mean = np.mean(extras, axis=0)
    e_std = np.std(extras, axis=0)
    for j in range(e_std.size):
        if e_std[j] <= 0.0:
            log.warning("constant extras column %d: clamping std to 1", j)
            e_std[j] = 1.0

    return Normalizer(
        demand_mean=float(np.mean(demand)),
        demand_std=_safe_std(demand, "demand"),
        temp_mean=float(np.mean(temp)),
        temp_std=_safe_std(temp, "temperature"),
        extras_mean=e_mean,
        extras_std=e_std,
    )


def apply_normalizer(window, norm):
    """Return the window expressed in normalized feature units."""
    return ForecastWindow(
        history_demand=norm.normalize_demand(window.history_demand),
        history_temperature=norm.normalize_temp(window.history_temperature),
        history_extras=norm.normalize_extras(window.history_extras),
        target_demand=float(norm.normalize_demand(window.target_demand)),
        target_index=window.target_index,
    )
