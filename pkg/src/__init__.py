"""
Ergodic Workbench - exact desk-scale experiments on the conjugacy, independence
and tower structure of measure-preserving transformations.
"""
from .core import (
    CellSet,
    ConfigManager,
    ExperimentConfig,
    ExperimentRunner,
    GridMap,
    GridSpace,
    RunRecord,
    run_experiment,
)

from .utils.exceptions import (
    WorkbenchException,
    IncompatibleSpacesError,
    ValidationError,
    ConfigurationError,
    PrecisionUnattainableError,
    ScanBudgetError,
    GapUnattainableError,
    CertificateViolationError,
)

__version__ = '0.1.0'

__all__ = [
    'CellSet',
    'ConfigManager',
    'ExperimentConfig',
    'ExperimentRunner',
    'GridMap',
    'GridSpace',
    'RunRecord',
    'run_experiment',
    'WorkbenchException',
    'IncompatibleSpacesError',
    'ValidationError',
    'ConfigurationError',
    'PrecisionUnattainableError',
    'ScanBudgetError',
    'GapUnattainableError',
    'CertificateViolationError',
]
