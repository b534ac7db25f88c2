"""Experiment configs, orchestration and result files."""
from .config import ConfigError, ExperimentConfig, load_config, load_preset, preset_names
from .output import ResultRow, emit_results
from .runner import power_law_exponent, run_experiment, run_param_grid, verify

__all__ = ["ConfigError", "ExperimentConfig", "ResultRow", "emit_results", "load_config",
           "load_preset", "power_law_exponent", "preset_names", "run_experiment",
           "run_param_grid", "verify"]
