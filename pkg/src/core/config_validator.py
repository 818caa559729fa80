import json
from typing import Dict, Any, List
from jsonschema import SchemaError, Draft202012Validator
from ..utils.exceptions import ConfigurationError

SUPPORTED_CONFIG_VERSIONS = (1,)


class ConfigValidator:
    """
    Structural checks for experiment files, run before ExperimentConfig.from_dict.

    The schema covers types, enums and the "p/q" pattern for rationals;
    cross-field rules (realizable atoms, M >= rank + W) stay in from_dict.
    """

    def __init__(self, schema_path: str):
        """
        Args:
            schema_path (str): Path to a Draft 2020-12 JSON schema.
        """
        self.schema_path = schema_path
        self.schema = self._read_schema()
        self._validator = Draft202012Validator(self.schema)

    def _read_schema(self) -> Dict[str, Any]:
        """
        Raises:
            ConfigurationError: If the schema file is missing, not JSON, or not a valid schema.
        """
        try:
            with open(self.schema_path, 'r') as f:
                schema = json.load(f)
            Draft202012Validator.check_schema(schema)
        except FileNotFoundError:
            raise ConfigurationError(f"Schema file not found: {self.schema_path}")
        except (json.JSONDecodeError, SchemaError) as e:
            raise ConfigurationError(f"Invalid schema file: {str(e)}")
        return schema

    def schema_errors(self, config: Dict[str, Any]) -> List[str]:
        """Every schema violation as 'path: message', ordered by path."""
        errors = sorted(self._validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
        return [f"{'.'.join(str(p) for p in error.absolute_path) or '<root>'}: {error.message}"
                for error in errors]

    def validate_config(self, config: Dict[str, Any]) -> None:
        """
        Raises:
            ConfigurationError: Listing all schema violations at once, or for an unsupported version.
        """
        errors = self.schema_errors(config)
        if errors:
            raise ConfigurationError(f"Configuration does not match schema: {'; '.join(errors)}")
        self._validate_version(config)

    def _validate_version(self, config: Dict[str, Any]) -> None:
        version = config.get("config_version")
        if version is None:
            raise ConfigurationError("Configuration version is missing.")
        if not isinstance(version, int) or isinstance(version, bool):
            raise ConfigurationError("Configuration version must be an integer.")
        if version not in SUPPORTED_CONFIG_VERSIONS:
            raise ConfigurationError(
                f"Unsupported configuration version {version}; "
                f"supported: {', '.join(map(str, SUPPORTED_CONFIG_VERSIONS))}.")
