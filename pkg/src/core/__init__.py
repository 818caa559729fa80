"""Core workbench components."""
from .measure_core import CellSet, GridMap, GridSpace
from .config_manager import ConfigManager, ExperimentConfig, TowersConfig, OutputConfig
from .experiment_runner import ExperimentRunner, RunRecord, run_experiment

__all__ = [
    'CellSet',
    'GridMap',
    'GridSpace',
    'ConfigManager',
    'ExperimentConfig',
    'TowersConfig',
    'OutputConfig',
    'ExperimentRunner',
    'RunRecord',
    'run_experiment',
]
