"""Asynchronous periodic event-triggered secondary frequency control for
islanded AC microgrids: graph spectral checks, controllers, plant models,
a deterministic hybrid simulator and a CLI."""

from .controller import BroadcastTable, Channel, ControllerParams, TriggerMode, TriggerState
from .engine import Scenario, TraceLog, convergence_time, event_counts, run
from .graph import (
    CommGraph,
    check_theorem1_condition,
    compute_lambda,
    is_strongly_connected,
    laplacian,
    left_perron_vector,
    lemma1_check,
    spectral_data,
)
from .plant import DGParams, NetworkModel, PlantState, phasor_solve

__version__ = "0.1.0"

__all__ = [
    "BroadcastTable", "Channel", "CommGraph", "ControllerParams", "DGParams",
    "NetworkModel", "PlantState", "Scenario", "TraceLog", "TriggerMode", "TriggerState",
    "check_theorem1_condition", "compute_lambda", "convergence_time", "event_counts",
    "is_strongly_connected", "laplacian", "left_perron_vector", "lemma1_check",
    "phasor_solve", "run", "spectral_data",
]
