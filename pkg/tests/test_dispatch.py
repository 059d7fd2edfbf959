import itertools
import math

import numpy as np
import pytest

from conftest import random_fleet
from gridgauntlet import dispatch as dp
from gridgauntlet.storage import BatterySpec


def fleet(*specs):
    return dp.ThermalFleet(dp.ThermalUnit(id=i, capacity_mw=c, marginal_cost=m)
                           for i, c, m in specs)


# --- rho ---------------------------------------------------------------------

def test_rho_direct_example():
    r = dp.rho_from_series([5, 1], [3, 4])
    assert r.value == pytest.approx(2 / 3)
    assert not r.degenerate


def test_rho_no_surplus():
    r = dp.rho_from_series([1, 2, 3], [2, 3, 3])
    assert r.value == 0.0


def test_rho_degenerate_sentinel():
    r = dp.rho_from_series([4, 4], [4, 4])
    assert math.isinf(r.value)
    assert r.degenerate


def test_rho_on_dataset():
    from gridgauntlet import synthetic
    ds = synthetic.ercot_like(hours=50, seed=0)
    r = dp.rho_indicator(ds)
    assert r.value >= 0.0


# --- merit dispatch ----------------------------------------------------------

def test_merit_fill_example():
    f = fleet(("A", 100, 10), ("B", 100, 30))
    out, price = dp.merit_dispatch(f, 150)
    assert out.tolist() == [100, 50]
    assert price == 30


def test_merit_zero_need():
    f = fleet(("A", 100, 10), ("B", 100, 30))
    out, price = dp.merit_dispatch(f, 0)
    assert out.tolist() == [0, 0]
    assert price == 10  # cheapest unit convention


def test_merit_infeasible_reports_deficit():
    f = fleet(("A", 100, 10), ("B", 100, 30))
    with pytest.raises(dp.InfeasibleDispatchError) as exc:
        dp.merit_dispatch(f, 250)
    assert exc.value.deficit == pytest.approx(50)


def test_merit_sorts_units_by_cost():
    f = fleet(("X", 50, 90), ("Y", 50, 10))
    assert [u.id for u in f.units] == ["Y", "X"]


def test_merit_optimality_by_enumeration():
    """No integer-MW reshuffle beats merit order, on small random fleets."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        f = random_fleet(rng)
        need = int(rng.integers(0, int(f.total_capacity) + 1))
        out, _ = dp.merit_dispatch(f, need)
        cost = sum(u.marginal_cost * o for u, o in zip(f.units, out))
        caps = [int(u.capacity_mw) for u in f.units]
        best = math.inf
        for combo in itertools.product(*(range(0, c + 1, max(1, c // 8)) for c in caps)):
            if sum(combo) >= need:
                best = min(best, sum(u.marginal_cost * q for u, q in zip(f.units, combo)))
        assert cost <= best + 1e-9


# --- settle_slot -------------------------------------------------------------

def test_settle_perfect_forecast():
    f = fleet(("A", 200, 10))
    s = dp.settle_slot(f, 100, 100, 0, 0, BatterySpec(0))
    assert s.thermal_cost == pytest.approx(1000)
    assert s.charge_mw == 0 and s.discharge_mw == 0
    assert s.waste_cost == 0 and s.premium_cost == 0


def test_settle_overforecast_charges_battery():
    f = fleet(("A", 200, 10))
    s = dp.settle_slot(f, 120, 100, 0, 0, BatterySpec(1e6))
    assert s.thermal_cost == pytest.approx(1200)
    assert s.charge_mw == pytest.approx(20)
    assert s.soc_end_mwh == pytest.approx(20)
    assert s.waste_cost == 0
    assert s.total_cost == pytest.approx(1200)


def test_settle_underforecast_premium():
    f = fleet(("A", 90, 10), ("B", 100, 30))
    s = dp.settle_slot(f, 80, 100, 0, 0, BatterySpec(0))
    assert s.thermal_cost == pytest.approx(800)
    assert s.shortfall_mw == pytest.approx(20)
    assert s.settlement_price == 30
    assert s.total_cost == pytest.approx(1400)


def test_settle_overforecast_no_battery_wastes():
    f = fleet(("A", 200, 10))
    s = dp.settle_slot(f, 120, 100, 0, 0, BatterySpec(0))
    assert s.wasted_mw == pytest.approx(20)
    assert s.waste_cost == pytest.approx(200)  # c_t * (FD - D - g)+


def test_settle_balance_residual_random():
    rng = np.random.default_rng(21)
    for _ in range(500):
        f = random_fleet(rng)
        cap = f.total_capacity
        d = rng.uniform(0, cap * 0.7)
        fd = d * rng.uniform(0.7, 1.3)
        w = rng.uniform(0, cap * 0.3)
        batt = BatterySpec(float(rng.uniform(0, 50)))
        soc = rng.uniform(0, batt.capacity_mwh)
        s = dp.settle_slot(f, fd, d, w, soc, batt)
        assert abs(s.balance_residual_mw) < 1e-9
        assert s.charge_mw * s.discharge_mw == 0.0
        assert 0.0 <= s.soc_end_mwh <= batt.capacity_mwh
        for o, u in zip(s.unit_output_mw, f.units):
            assert -1e-12 <= o <= u.capacity_mw + 1e-12


def test_settle_propagates_infeasibility():
    f = fleet(("A", 50, 10))
    with pytest.raises(dp.InfeasibleDispatchError):
        dp.settle_slot(f, 100, 100, 0, 0, BatterySpec(0))


# --- total_cost --------------------------------------------------------------

def test_total_cost_single_slot():
    f = fleet(("A", 200, 10))
    s = dp.settle_slot(f, 100, 100, 0, 0, BatterySpec(0))
    br = dp.total_cost([s])
    assert br.total == pytest.approx(s.total_cost)


def test_total_cost_zero_demand():
    f = fleet(("A", 200, 10))
    sett = dp.simulate(f, [0, 0, 0], [0, 0, 0], [0, 0, 0], BatterySpec(10))
    assert dp.total_cost(sett).total == 0.0


def test_total_cost_matches_brute_sum():
    rng = np.random.default_rng(5)
    f = fleet(("A", 500, 12), ("B", 500, 40))
    fd = rng.uniform(100, 600, size=48)
    d = rng.uniform(100, 600, size=48)
    w = rng.uniform(0, 150, size=48)
    sett = dp.simulate(f, fd, d, w, BatterySpec(80))
    br = dp.total_cost(sett)
    brute = sum(s.thermal_cost + s.waste_cost + s.premium_cost for s in sett)
    assert br.total == pytest.approx(brute, abs=1e-9)


def test_total_cost_broken_chain():
    f = fleet(("A", 200, 10))
    a = dp.settle_slot(f, 100, 100, 0, 0, BatterySpec(50), hour=0)
    b = dp.settle_slot(f, 120, 100, 0, 30, BatterySpec(50), hour=1)  # wrong soc_start
    with pytest.raises(dp.ConsistencyError):
        dp.total_cost([a, b])


def test_simulate_soc_chain_and_legality():
    rng = np.random.default_rng(9)
    f = fleet(("A", 400, 15), ("B", 300, 45))
    fd = rng.uniform(100, 500, size=48)
    d = rng.uniform(100, 500, size=48)
    w = rng.uniform(0, 120, size=48)
    batt = BatterySpec(60)
    sett = dp.simulate(f, fd, d, w, batt)
    assert sett[0].soc_start_mwh == 0.0
    for prev, cur in zip(sett, sett[1:]):
        assert cur.soc_start_mwh == prev.soc_end_mwh
    for s in sett:
        assert s.soc_end_mwh == s.soc_start_mwh + s.charge_mw - s.discharge_mw
        assert 0.0 <= s.soc_end_mwh <= batt.capacity_mwh


def test_settlement_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    f = fleet(("A", 400, 15), ("B", 300, 45))
    sett = dp.simulate(f, rng.uniform(100, 500, 10), rng.uniform(100, 500, 10),
                       rng.uniform(0, 100, 10), BatterySpec(40))
    path = tmp_path / "settle.csv"
    dp.write_settlements(path, f, sett)
    loaded = dp.read_settlements(path, f)
    assert loaded == sett
