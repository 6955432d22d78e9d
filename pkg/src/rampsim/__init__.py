"""Analytic simulator and planner for a RAMP-style optical circuit-switched fabric."""

from .params import InvalidParams, NodeCoord, RampParams, ScaleReport, SubnetKind, derived_quantities, min_message_per_slot
from .engine import CollectiveOp, CollectivePlan, PlanError, plan_collective

__version__ = "0.1.0"

__all__ = [
    "CollectiveOp", "CollectivePlan", "InvalidParams", "NodeCoord", "PlanError", "RampParams",
    "ScaleReport", "SubnetKind", "derived_quantities", "min_message_per_slot", "plan_collective",
]
