"""Merit-order economic dispatch and per-slot cost settlement.

Thermal units fill in ascending marginal-cost order.  Each slot is priced in
three parts: the scheduled generation at its merit stack, wasted
over-procurement at the schedule's marginal price, and any real-time
shortfall at the settlement marginal price (the most expensive unit touched
once the shortfall is served).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .storage import BatterySpec, control_slot

log = logging.getLogger(__name__)


class InfeasibleDispatchError(RuntimeError):
    def __init__(self, need, capacity):
        self.deficit = need - capacity
        super().__init__(
            f"thermal need {need} MW exceeds fleet capacity {capacity} MW "
            f"(deficit {self.deficit} MW)")


class ConsistencyError(ValueError):
    """Settlement sequence violates state-of-charge chaining."""


@dataclass(frozen=True)
class ThermalUnit:
    id: str
    capacity_mw: float
    marginal_cost: float  # $/MWh

    def __post_init__(self):
        if self.capacity_mw <= 0:
            raise ValueError(f"unit {self.id}: capacity must be positive")


class ThermalFleet:
    """Ordered merit stack; construction sorts units by ascending cost."""

    def __init__(self, units):
        units = list(units)
        if not units:
            raise ValueError("fleet needs at least one unit")
        self.units = sorted(units, key=lambda u: (u.marginal_cost, u.id))
        self.total_capacity = sum(u.capacity_mw for u in self.units)

    def __len__(self):
        return len(self.units)

    def validate_against(self, max_net_demand):
        if self.total_capacity < max_net_demand:
            log.warning("fleet capacity %.1f MW below max credible net demand %.1f MW",
                        self.total_capacity, max_net_demand)


@dataclass(frozen=True)
class RhoResult:
    value: float
    degenerate: bool  # True when there is no renewable deficit at all


@dataclass(frozen=True)
class SlotSettlement:
    hour: int
    forecast_mw: float
    actual_mw: float
    renewable_mw: float
    unit_output_mw: tuple      # real-time output per fleet unit, merit order
    charge_mw: float           # net g_t
    discharge_mw: float        # net b_t
    soc_start_mwh: float
    soc_end_mwh: float
    wasted_mw: float
    shortfall_mw: float
    thermal_cost: float
    waste_cost: float
    premium_cost: float
    marginal_price: float      # c_t, schedule stack
    settlement_price: float    # c'_t, real-time stack

    @property
    def total_cost(self):
        return self.thermal_cost + self.waste_cost + self.premium_cost

    @property
    def balance_residual_mw(self):
        """Power balance with explicit waste slack; ~0 for a valid slot."""
        return (sum(self.unit_output_mw) + self.renewable_mw
                - self.actual_mw - self.charge_mw + self.discharge_mw - self.wasted_mw)


def rho_from_series(renewable, demand):
    """Ratio of total renewable surplus to total renewable deficit."""
    w = np.asarray(renewable, dtype=np.float64)
    d = np.asarray(demand, dtype=np.float64)
    surplus = float(np.sum(np.maximum(w - d, 0.0)))
    gap = float(np.sum(np.maximum(d - w, 0.0)))
    if gap == 0.0:
        return RhoResult(value=math.inf, degenerate=True)
    return RhoResult(value=surplus / gap, degenerate=False)


def rho_indicator(ds):
    return rho_from_series(ds.renewable, ds.demand)


def merit_dispatch(fleet, need):
    """Fill units cheapest-first; returns (outputs array, marginal price)."""
    if need < 0:
        raise ValueError(f"thermal need must be >= 0: {need}")
    if need > fleet.total_capacity:
        raise InfeasibleDispatchError(need, fleet.total_capacity)
    outputs = np.zeros(len(fleet.units))
    marginal = fleet.units[0].marginal_cost  # right-limit convention at need 0
    remaining = need
    for i, unit in enumerate(fleet.units):
        if remaining <= 0:
            break
        take = min(unit.capacity_mw, remaining)
        outputs[i] = take
        remaining -= take
        marginal = unit.marginal_cost
    return outputs, marginal


def _merit_cost(fleet, outputs):
    return float(sum(u.marginal_cost * o for u, o in zip(fleet.units, outputs)))


def settle_slot(fleet, fd, d, w, soc, battery, hour=0):
    """Dispatch against the forecast, settle against reality, price the slot."""
    decision = control_slot(fd, d, w, soc, battery, fleet)
    need = decision.thermal_need_mw
    shortfall = decision.shortfall_mw

    sched_outputs, c_t = merit_dispatch(fleet, need)
    thermal_cost = _merit_cost(fleet, sched_outputs)

    rt_outputs, c_prime = merit_dispatch(fleet, need + shortfall)
    premium_cost = c_prime * shortfall
    waste_cost = c_t * max(fd - d - decision.charge_mw, 0.0)

    return SlotSettlement(
        hour=hour,
        forecast_mw=fd,
        actual_mw=d,
        renewable_mw=w,
        unit_output_mw=tuple(rt_outputs),
        charge_mw=decision.charge_mw,
        discharge_mw=decision.discharge_mw,
        soc_start_mwh=soc,
        soc_end_mwh=decision.soc_end_mwh,
        wasted_mw=decision.waste_mw,
        shortfall_mw=shortfall,
        thermal_cost=thermal_cost,
        waste_cost=waste_cost,
        premium_cost=premium_cost,
        marginal_price=c_t,
        settlement_price=c_prime,
    )


def simulate(fleet, fd_series, d_series, w_series, battery, hours=None):
    """Run a horizon, chaining state of charge from an empty battery."""
    n = len(fd_series)
    if not (len(d_series) == len(w_series) == n):
        raise ValueError("forecast, actual and renewable series must have equal length")
    hour_ids = hours if hours is not None else list(range(n))
    soc = 0.0
    settlements = []
    for t in range(n):
        s = settle_slot(fleet, float(fd_series[t]), float(d_series[t]), float(w_series[t]),
                        soc, battery, hour=int(hour_ids[t]))
        settlements.append(s)
        soc = s.soc_end_mwh
    return settlements


@dataclass(frozen=True)
class CostBreakdown:
    thermal: float
    waste: float
    premium: float

    @property
    def total(self):
        return self.thermal + self.waste + self.premium


def total_cost(settlements):
    """Sum cost components over a horizon; the SoC chain must be intact."""
    if not settlements:
        raise ValueError("no settlements to total")
    for prev, cur in zip(settlements, settlements[1:]):
        if cur.soc_start_mwh != prev.soc_end_mwh:
            raise ConsistencyError(
                f"broken SoC chain between hours {prev.hour} and {cur.hour}: "
                f"{prev.soc_end_mwh} != {cur.soc_start_mwh}")
    return CostBreakdown(
        thermal=sum(s.thermal_cost for s in settlements),
        waste=sum(s.waste_cost for s in settlements),
        premium=sum(s.premium_cost for s in settlements),
    )


# --- settlement CSV -----------------------------------------------------------

def settlement_columns(fleet):
    base = ["hour", "forecast_mw", "actual_mw", "renewable_mw"]
    base += [f"unit_{u.id}_mw" for u in fleet.units]
    base += ["charge_mw", "discharge_mw", "soc_start_mwh", "soc_end_mwh",
             "wasted_mw", "shortfall_mw", "thermal_cost", "waste_cost",
             "premium_cost", "marginal_price", "settlement_price", "total_cost"]
    return base


def write_settlements(path, fleet, settlements):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(settlement_columns(fleet))
        for s in settlements:
            # repr(float(x)) is the shortest string that round-trips exactly;
            # float() also strips any numpy scalar types that crept in.
            row = [s.hour, s.forecast_mw, s.actual_mw, s.renewable_mw]
            row += list(s.unit_output_mw)
            row += [s.charge_mw, s.discharge_mw, s.soc_start_mwh,
                    s.soc_end_mwh, s.wasted_mw, s.shortfall_mw,
                    s.thermal_cost, s.waste_cost, s.premium_cost,
                    s.marginal_price, s.settlement_price, s.total_cost]
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return path


def read_settlements(path, fleet):
    settlements = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        expected = settlement_columns(fleet)
        if list(reader.fieldnames or ()) != expected:
            raise ValueError(f"unexpected settlement columns in {path}")
        for row in reader:
            settlements.append(SlotSettlement(
                hour=int(row["hour"]),
                forecast_mw=float(row["forecast_mw"]),
                actual_mw=float(row["actual_mw"]),
                renewable_mw=float(row["renewable_mw"]),
                unit_output_mw=tuple(float(row[f"unit_{u.id}_mw"]) for u in fleet.units),
                charge_mw=float(row["charge_mw"]),
                discharge_mw=float(row["discharge_mw"]),
                soc_start_mwh=float(row["soc_start_mwh"]),
                soc_end_mwh=float(row["soc_end_mwh"]),
                wasted_mw=float(row["wasted_mw"]),
                shortfall_mw=float(row["shortfall_mw"]),
                thermal_cost=float(row["thermal_cost"]),
                waste_cost=float(row["waste_cost"]),
                premium_cost=float(row["premium_cost"]),
                marginal_price=float(row["marginal_price"]),
                settlement_price=float(row["settlement_price"]),
            ))
    return settlements
