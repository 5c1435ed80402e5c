"""Deterministic multi-UAV relay-chain and lidar-mapping simulation lab."""

from .config import ScenarioConfig, ScenarioError, load_scenario, parse_scenario
from .pipeline import Metrics, RunResult, compute_metrics, emit_outputs, run

__all__ = [
    "Metrics",
    "RunResult",
    "ScenarioConfig",
    "ScenarioError",
    "compute_metrics",
    "emit_outputs",
    "load_scenario",
    "parse_scenario",
    "run",
]

__version__ = "0.1.0"
