"""Experiment harness: config files, sweeps, analytic reports and figure presets."""
from .analysis import ModelAnalysis, analyze_model
from .config import load_config, make_config, parse_config_text
from .figures import PRESETS, replicate_figure, run_manifest
from .sweep import AXES, SweepResult, SweepSpec, run_sweep

__all__ = [
    "ModelAnalysis", "analyze_model", "load_config", "make_config", "parse_config_text",
    "PRESETS", "replicate_figure", "run_manifest", "AXES", "SweepResult", "SweepSpec", "run_sweep",
]
