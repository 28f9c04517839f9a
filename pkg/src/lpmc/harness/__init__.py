"""Experiment plumbing: configs, presets, the chain runner, plot scripts and the CLI."""

from .config import ExperimentConfig, config_from_dict, parse_config
from .plots import FIGURES, emit_plot_script
from .presets import PRESETS
from .runner import RunRecord, run_experiment

__all__ = ["ExperimentConfig", "FIGURES", "PRESETS", "RunRecord", "config_from_dict",
           "emit_plot_script", "parse_config", "run_experiment"]
