import numpy as np
import pytest

from gridgauntlet import (TrainConfig, fit_normalizer, make_windows, split_windows, train)
from gridgauntlet import synthetic


@pytest.fixture(scope="session")
def sinusoid_model():
    """Small trained forecaster on easy sinusoidal demand.

    Returns (params, norm, train_windows, test_windows).
    """
    ds = synthetic.sinusoid_like(hours=600, seed=1)
    windows = make_windows(ds, 24)
    train_w, test_w = split_windows(windows)
    norm = fit_normalizer(train_w)
    params, _ = train(train_w, TrainConfig(epochs=200, learning_rate=0.05,
                                           hidden_size=16, seed=0), norm)
    return params, norm, train_w, test_w


@pytest.fixture(scope="session")
def ercot_scenario():
    """Desk-scale ERCOT-shaped scenario with a trained model.

    Returns (ds, params, norm, train_windows, test_windows).
    """
    ds = synthetic.ercot_like(hours=1500, seed=7)
    windows = make_windows(ds, 24)
    train_w, test_w = split_windows(windows)
    norm = fit_normalizer(train_w)
    params, _ = train(train_w, TrainConfig(epochs=150, learning_rate=0.05,
                                           hidden_size=24, seed=0), norm)
    return ds, params, norm, train_w, test_w


def random_fleet(rng, max_units=3, grid_mw=True):
    """Random small merit stack for dispatch oracles."""
    from gridgauntlet import ThermalFleet, ThermalUnit
    n = rng.integers(1, max_units + 1)
    units = []
    for i in range(n):
        cap = float(rng.integers(20, 120)) if grid_mw else float(rng.uniform(20, 120))
        cost = float(rng.integers(5, 100))
        units.append(ThermalUnit(id=f"u{i}", capacity_mw=cap, marginal_cost=cost))
    return ThermalFleet(units)
