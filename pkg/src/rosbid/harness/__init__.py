"""Experiment configuration, execution, export and plotting."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runner import run_experiment, run_single

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "run_experiment", "run_single"]
