"""Experiment harness: configuration, drivers, figure emission, CLI."""

from .config import RunConfig, parse_config_file, resolve_config
from .experiments import (
    cmd_explain,
    cmd_render,
    cmd_sweep,
    cmd_variability,
    run_sweep,
    run_variability,
)

__all__ = [
    "RunConfig",
    "parse_config_file",
    "resolve_config",
    "cmd_explain",
    "cmd_render",
    "cmd_sweep",
    "cmd_variability",
    "run_sweep",
    "run_variability",
]
