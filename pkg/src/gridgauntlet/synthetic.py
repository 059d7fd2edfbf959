"""Synthetic ERCOT-shaped hourly data for desk-scale experiments.

Produces a Sep-Dec style horizon: summer-to-winter temperature drift, strong
daily and weekly demand cycles, smooth wind, diurnal solar, and weather
covariates.  Renewables are rescaled so that at joint coefficient 6.5 the
renewable share of demand lands at 43%, mirroring the scaled scenario grid.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data_ingest import dataset_from_frame

# share of demand covered by wind+solar before any scaling coefficient;
# chosen so a joint coefficient of 6.5 yields 43% penetration
BASE_PENETRATION = 0.43 / 6.5


def _ar1(rng, n, phi, sigma):
    out = np.empty(n)
    out[0] = rng.normal(0.0, sigma / np.sqrt(1.0 - phi * phi))
    eps = rng.normal(0.0, sigma, size=n)
    for i in range(1, n):
        out[i] = phi * out[i - 1] + eps[i]
    return out


def ercot_like_frame(hours=2900, seed=0, start="2012-09-01"):
    """Return a pandas frame in the canonical CSV schema."""
    rng = np.random.default_rng(seed)
    n = int(hours)
    ts = pd.date_range(start=start, periods=n, freq="h")
    hod = ts.hour.to_numpy(dtype=np.float64)
    dow = ts.dayofweek.to_numpy(dtype=np.float64)
    frac = np.arange(n, dtype=np.float64) / max(n - 1, 1)

    # temperature: seasonal decline, afternoon peak, smooth noise
    temp = (
        29.0 - 19.0 * frac
        + 6.0 * np.sin(2.0 * np.pi * (hod - 9.0) / 24.0)
        + _ar1(rng, n, 0.95, 0.6)
    )

    # demand: daily + weekly structure, cooling/heating coupling, noise
    comfort = 18.0
    demand = (
        38000.0
        + 9000.0 * np.sin(2.0 * np.pi * (hod - 9.0) / 24.0)
        + 2500.0 * np.where(dow < 5, 1.0, -1.0)
        + 420.0 * np.abs(temp - comfort)
        + _ar1(rng, n, 0.9, 900.0)
    )
    demand = np.maximum(demand, 8000.0)

    # wind: smooth, strictly nonnegative
    wind = np.maximum(1800.0 + _ar1(rng, n, 0.97, 220.0), 0.0)

    # solar: diurnal bell shaped by cloud cover
    cloud = np.clip(0.35 + _ar1(rng, n, 0.9, 0.12), 0.0, 1.0)
    bell = np.maximum(np.sin(2.0 * np.pi * (hod - 6.0) / 24.0), 0.0) ** 1.5
    solar = 2400.0 * bell * (1.0 - 0.6 * cloud)

    # pin the base renewable share so coefficient grids hit known penetrations
    share = np.sum(wind + solar) / np.sum(demand)
    adjust = BASE_PENETRATION / share
    wind *= adjust
    solar *= adjust

    precip = np.maximum(rng.gamma(0.3, 1.2, size=n) - 0.25, 0.0)
    air_density = 1.18 + 0.04 * (1.0 - frac) + rng.normal(0.0, 0.005, size=n)

    return pd.DataFrame({
        "timestamp": ts,
        "demand_mw": demand,
        "temperature_c": temp,
        "wind_mw": wind,
        "solar_mw": solar,
        "precip": precip,
        "air_density": air_density,
        "cloud_cover": cloud,
    })


def ercot_like(hours=2900, seed=0, start="2012-09-01"):
    """Synthetic dataset, validated through the normal ingestion path."""
    return dataset_from_frame(ercot_like_frame(hours=hours, seed=seed, start=start))


def write_csv(path, hours=2900, seed=0, start="2012-09-01"):
    frame = ercot_like_frame(hours=hours, seed=seed, start=start)
    frame.to_csv(path, index=False)
    return path


def sinusoid_like(hours=600, seed=0, start="2012-09-01", noise_mw=25.0):
    """Small, very learnable dataset: sinusoidal demand plus mild noise."""
    rng = np.random.default_rng(seed)
    n = int(hours)
    ts = pd.date_range(start=start, periods=n, freq="h")
    hod = ts.hour.to_numpy(dtype=np.float64)
    demand = 1000.0 + 300.0 * np.sin(2.0 * np.pi * hod / 24.0) + rng.normal(0.0, noise_mw, size=n)
    demand = np.maximum(demand, 100.0)
    temp = 20.0 + 5.0 * np.sin(2.0 * np.pi * (hod - 3.0) / 24.0) + rng.normal(0.0, 0.5, size=n)
    frame = pd.DataFrame({
        "timestamp": ts,
        "demand_mw": demand,
        "temperature_c": temp,
        "wind_mw": np.full(n, 50.0),
        "solar_mw": np.zeros(n),
    })
    return dataset_from_frame(frame)
