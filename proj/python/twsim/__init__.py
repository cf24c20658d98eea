"""Optimistic (Time Warp) PHOLD simulator."""

from ._twsim import (
    Backend,
    ConfigError,
    ExperimentRow,
    ParkMiller,
    PholdConfig,
    RngMode,
    RunConfig,
    RunError,
    RunMetrics,
    initial_event_count,
    load_config,
    parse_config,
    results_csv,
    run_experiment,
    run_inproc,
    run_scheduled,
    run_sequential,
    run_tcp_local_cluster,
    seed_for_entity,
)

__all__ = [
    "Backend",
    "ConfigError",
    "ExperimentRow",
    "ParkMiller",
    "PholdConfig",
    "RngMode",
    "RunConfig",
    "RunError",
    "RunMetrics",
    "initial_event_count",
    "load_config",
    "parse_config",
    "results_csv",
    "run_experiment",
    "run_inproc",
    "run_scheduled",
    "run_sequential",
    "run_tcp_local_cluster",
    "seed_for_entity",
]
