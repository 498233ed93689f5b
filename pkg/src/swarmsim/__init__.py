"""Heterogeneous robot swarm searching for and tracking a fast target with
k-nearest-network PSO and adaptive repulsion."""

from .dynamics import step
from .experiment import RunSummary, SweepSpec, figure_configs, run_simulation, run_sweep
from .metrics import MetricsAccumulator, avg_max_speed
from .model import FAST, SLOW, AgentClass, ConfigError, SimConfig, Swarm, TargetState, init_swarm, validate
from .rng import RngStream
from .topology import knn

__all__ = [
    "AgentClass", "ConfigError", "FAST", "MetricsAccumulator", "RngStream", "RunSummary", "SLOW",
    "SimConfig", "Swarm", "SweepSpec", "TargetState", "avg_max_speed", "figure_configs", "init_swarm",
    "knn", "run_simulation", "run_sweep", "step", "validate",
]
