"""Experiment runner: configs, canned experiments and the command line."""
from .config import ConfigError, ExperimentConfig, load_config, validate_config
from .experiments import ResultManifest, run

__all__ = ["ConfigError", "ExperimentConfig", "ResultManifest", "load_config", "run", "validate_config"]
