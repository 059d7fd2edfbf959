"""gridgauntlet: adversarial load-forecast attacks, economic dispatch cost
impact, and battery-storage defense at desk scale."""

from .adversary import AttackBudget, AttackedWindow, attack_series, attack_window, pgd_step, project_ball
from .analysis import (HourRecord, attack_degree_sweep, classify_hours, cost_loss_ratio,
                       emit_heatmap, penetration_comparison)
from .data_ingest import (ForecastWindow, Normalizer, TimeSeriesDataset, apply_normalizer,
                          fit_normalizer, load_csv, make_windows, penetration,
                          scale_renewables, split_windows)
from .dispatch import (CostBreakdown, InfeasibleDispatchError, SlotSettlement, ThermalFleet,
                       ThermalUnit, merit_dispatch, rho_from_series, rho_indicator,
                       settle_slot, simulate, total_cost)
from .forecaster import (ModelParams, TrainConfig, evaluate, load_checkpoint, mape, mse,
                         predict, save_checkpoint, train)
from .storage import BatterySpec, control_slot

__version__ = "0.1.0"

__all__ = [
    "AttackBudget", "AttackedWindow", "attack_series", "attack_window", "pgd_step",
    "project_ball", "HourRecord", "attack_degree_sweep", "classify_hours",
    "cost_loss_ratio", "emit_heatmap", "penetration_comparison", "ForecastWindow",
    "Normalizer", "TimeSeriesDataset", "apply_normalizer", "fit_normalizer", "load_csv",
    "make_windows", "penetration", "scale_renewables", "split_windows", "CostBreakdown",
    "InfeasibleDispatchError", "SlotSettlement", "ThermalFleet", "ThermalUnit",
    "merit_dispatch", "rho_from_series", "rho_indicator", "settle_slot", "simulate",
    "total_cost", "ModelParams", "TrainConfig", "evaluate", "load_checkpoint", "mape",
    "mse", "predict", "save_checkpoint", "train", "BatterySpec", "control_slot",
]
