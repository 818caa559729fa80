import pytest
import json
from src.core.config_validator import ConfigValidator
from src.utils.exceptions import ConfigurationError


@pytest.fixture
def invalid_schema_file(tmp_path):
    path = tmp_path / "broken_schema.json"
    path.write_text("{not json")
    return str(path)


def test_load_valid_schema():
    """Test loading a valid JSON schema."""
    validator = ConfigValidator('config/config_schema.json')
    assert isinstance(validator.schema, dict)


def test_load_invalid_schema():
    """Test loading an invalid JSON schema."""
    with pytest.raises(ConfigurationError, match="Invalid schema file"):
        ConfigValidator('config/invalid_schema.json')


def test_load_unparseable_schema(invalid_schema_file):
    with pytest.raises(ConfigurationError, match="Invalid schema file"):
        ConfigValidator(invalid_schema_file)


def test_missing_schema_file():
    with pytest.raises(ConfigurationError, match="Schema file not found"):
        ConfigValidator('config/no_such_schema.json')


def test_validate_valid_config(small_config_data):
    """Test validating a valid configuration."""
    validator = ConfigValidator('config/config_schema.json')
    validator.validate_config(small_config_data)  # Should not raise an exception


def test_validate_shipped_config():
    validator = ConfigValidator('config/config_schema.json')
    with open('config/demo_config.json') as f:
        validator.validate_config(json.load(f))


def test_validate_invalid_config(small_config_data):
    """Test validating an invalid configuration."""
    validator = ConfigValidator('config/config_schema.json')
    small_config_data["epsilon"] = "0.5"
    small_config_data["map"] = "baker"
    with pytest.raises(ConfigurationError, match="does not match schema"):
        validator.validate_config(small_config_data)

    errors = validator.schema_errors(small_config_data)
    assert len(errors) == 2
    assert errors[0].startswith("epsilon:")
    assert errors[1].startswith("map:")


def test_schema_rejects_float_epsilon(small_config_data):
    small_config_data["epsilon"] = 0.5
    errors = ConfigValidator('config/config_schema.json').schema_errors(small_config_data)
    assert errors and errors[0].startswith("epsilon:")


def test_target_sets_shapes(small_config_data):
    validator = ConfigValidator('config/config_schema.json')
    small_config_data["target_sets"] = [{"0": 0}, [{"-1": 1}, {"-1": 0, "1": 1}]]
    assert validator.schema_errors(small_config_data) == []
    small_config_data["target_sets"] = [{"0": 2}]
    assert validator.schema_errors(small_config_data)
    small_config_data["target_sets"] = []
    assert validator.schema_errors(small_config_data)


def test_missing_required_sections(small_config_data):
    validator = ConfigValidator('config/config_schema.json')
    del small_config_data["seed"]
    small_config_data["output"] = {"formats": ["json"]}
    errors = validator.schema_errors(small_config_data)
    assert any(error.startswith("<root>:") and "'seed'" in error for error in errors)
    assert any(error.startswith("output:") for error in errors)


def test_validate_missing_config_version(small_config_data):
    """Test validating a configuration with a missing config_version."""
    validator = ConfigValidator('config/config_schema.json')
    del small_config_data["config_version"]
    with pytest.raises(ConfigurationError, match="config_version"):
        validator.validate_config(small_config_data)
    with pytest.raises(ConfigurationError, match="Configuration version is missing"):
        validator._validate_version(small_config_data)


def test_validate_non_integer_config_version(small_config_data):
    validator = ConfigValidator('config/config_schema.json')
    small_config_data["config_version"] = "1"
    with pytest.raises(ConfigurationError, match="does not match schema"):
        validator.validate_config(small_config_data)
    with pytest.raises(ConfigurationError, match="must be an integer"):
        validator._validate_version(small_config_data)


def test_validate_unsupported_config_version(small_config_data):
    """Test validating a configuration with an unsupported config_version."""
    validator = ConfigValidator('config/config_schema.json')
    small_config_data["config_version"] = 2
    with pytest.raises(ConfigurationError, match="Unsupported configuration version 2"):
        validator.validate_config(small_config_data)
