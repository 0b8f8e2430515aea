"""Experiment configuration, runners and command line entry point."""

from cutstokes3f.harness.config import ConfigError, ExperimentConfig, parse_config, read_config
from cutstokes3f.harness.experiments import (
    ExperimentResult,
    run_condition,
    run_convergence,
    run_experiment,
    run_sliver,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "parse_config",
    "read_config",
    "run_condition",
    "run_convergence",
    "run_experiment",
    "run_sliver",
]
