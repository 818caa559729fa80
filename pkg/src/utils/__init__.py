"""Utility modules for the workbench."""
from .exceptions import (
    WorkbenchException,
    IncompatibleSpacesError,
    ValidationError,
    ConfigurationError,
    PrecisionUnattainableError,
    ScanBudgetError,
    GapUnattainableError,
    CertificateViolationError,
)

__all__ = [
    'WorkbenchException',
    'IncompatibleSpacesError',
    'ValidationError',
    'ConfigurationError',
    'PrecisionUnattainableError',
    'ScanBudgetError',
    'GapUnattainableError',
    'CertificateViolationError',
]
