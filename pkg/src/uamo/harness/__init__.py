"""Command-line harness: configuration, dispatch and result tables."""

from uamo.harness.config import ConfigError, ExperimentConfig, parse_config
from uamo.harness.runner import run_experiment
from uamo.harness.table import Column, ResultTable

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "run_experiment", "Column", "ResultTable"]
