"""Custom exceptions for the ergodic workbench."""

class WorkbenchException(Exception):
    """Base exception class for all workbench errors."""
    def __init__(self, message: str, error_code: int = None):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)

class IncompatibleSpacesError(WorkbenchException):
    """Raised when operands live on different grid spaces."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Incompatible spaces: {message}", error_code)

class ValidationError(WorkbenchException):
    """Raised when the arguments of an operation violate its preconditions."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Validation error: {message}", error_code)

class ConfigurationError(WorkbenchException):
    """Raised when there is an error in configuration."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Configuration error: {message}", error_code)

class PrecisionUnattainableError(WorkbenchException):
    """Raised when a set cannot be approximated to the requested precision."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Precision unattainable: {message}", error_code)

class ScanBudgetError(WorkbenchException):
    """Raised when an exhaustive intersection scan would exceed its budget."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Scan budget exceeded: {message}", error_code)

class GapUnattainableError(WorkbenchException):
    """Raised when the conjugating map cannot meet its per-atom gap target."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Gap unattainable: {message}", error_code)

class CertificateViolationError(WorkbenchException):
    """Raised when an audited implication that must always hold is violated."""
    def __init__(self, message: str, error_code: int = None):
        super().__init__(f"Certificate violation: {message}", error_code)
