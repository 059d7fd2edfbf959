"""Greedy battery control: schedule against the forecast, correct against reality.

Phase 1 serves the forecast: discharge first when renewables fall short,
otherwise charge the renewable surplus.  Phase 2 reconciles with the actual
demand: over-procurement is charged into remaining headroom (rest wasted),
under-procurement is covered by leftover renewables, then the battery, then
premium thermal power.  Flows are netted per slot so charge * discharge = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BatterySpec:
    capacity_mwh: float
    power_limit_mw: float | None = None  # per-direction, per-slot; None = unlimited
    efficiency: float = 1.0              # round-trip, applied on charge

    def __post_init__(self):
        if self.capacity_mwh < 0:
            raise ValueError(f"battery capacity must be >= 0: {self.capacity_mwh}")
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError(f"efficiency must be in (0, 1]: {self.efficiency}")
        if self.power_limit_mw is not None and self.power_limit_mw < 0:
            raise ValueError(f"power limit must be >= 0: {self.power_limit_mw}")


@dataclass(frozen=True)
class ControlDecision:
    charge_mw: float       # net g_t >= 0
    discharge_mw: float    # net b_t >= 0
    thermal_need_mw: float  # scheduled thermal generation
    waste_mw: float        # energy discarded (thermal over-procurement + unused renewables)
    shortfall_mw: float    # real-time demand served by premium thermal power
    soc_end_mwh: float


def control_slot(fd, d, w, soc, spec, fleet=None):
    """Greedy two-phase control for one hourly slot.

    ``fleet`` is accepted for interface symmetry with settlement but the
    greedy policy itself is price-blind.
    """
    fd, d, w, soc = float(fd), float(d), float(w), float(soc)
    if min(fd, d, w) < 0:
        raise ValueError(f"negative slot input: fd={fd}, d={d}, w={w}")
    cap = spec.capacity_mwh
    if not (-1e-9 <= soc <= cap + 1e-9):
        raise ValueError(f"state of charge {soc} outside [0, {cap}]")
    soc = min(max(soc, 0.0), cap)
    plim = math.inf if spec.power_limit_mw is None else spec.power_limit_mw
    eff = spec.efficiency

    charge = 0.0     # gross MW drawn into the battery this slot
    discharge = 0.0  # gross MW released this slot
    level = soc
    surplus_renewable = 0.0

    # phase 1: schedule against the forecast
    if w < fd:
        d1 = min(level, fd - w, plim)
        level -= d1
        discharge += d1
        need = fd - w - d1
    else:
        c1 = min((cap - level) / eff if eff > 0 else 0.0, w - fd, plim)
        level += c1 * eff
        charge += c1
        surplus_renewable = w - fd - c1
        need = 0.0

    # phase 2: settle against the actual demand
    waste = 0.0
    shortfall = 0.0
    if fd > d:
        over = fd - d
        c2 = min((cap - level) / eff, over, plim - charge)
        c2 = max(c2, 0.0)
        level += c2 * eff
        charge += c2
        waste = (over - c2) + surplus_renewable
    else:
        deficit = d - fd
        used = min(surplus_renewable, deficit)
        deficit -= used
        surplus_renewable -= used
        d2 = min(level, deficit, plim - discharge)
        d2 = max(d2, 0.0)
        level -= d2
        discharge += d2
        deficit -= d2
        shortfall = deficit
        waste = surplus_renewable

    g = max(charge - discharge, 0.0)
    b = max(discharge - charge, 0.0)

    if eff == 1.0:
        # keep the stored-energy recurrence soc_end = soc + g - b bit-exact,
        # nudging net flows if rounding pushed the level out of bounds
        for _ in range(3):
            end = soc + g - b
            if end > cap:
                g = max(g - (end - cap), 0.0)
            elif end < 0.0:
                b = max(b - (0.0 - end), 0.0)
            else:
                break
        level = soc + g - b
    else:
        level = min(max(level, 0.0), cap)

    return ControlDecision(
        charge_mw=g,
        discharge_mw=b,
        thermal_need_mw=need,
        waste_mw=waste,
        shortfall_mw=shortfall,
        soc_end_mwh=level,
    )
