"""Tests for the ConfigManager class."""
import json
import os
from fractions import Fraction
from unittest.mock import patch

import pytest

from src.core.config_manager import (OUTPUT_DIR_ENV, ConfigManager, ExperimentConfig, OutputConfig,
                                     TowersConfig)
from src.core.symbolic import Cylinder, CylinderUnion
from src.utils.exceptions import ConfigurationError


@pytest.fixture
def config_file_path(tmp_path):
    """Create a temporary config file path."""
    return str(tmp_path / "test_config.json")


def test_towers_config_defaults():
    """Test TowersConfig default values."""
    towers = TowersConfig.from_dict({})

    assert towers.map_kind == "odometer"
    assert towers.height == 8
    assert towers.k == 4
    assert towers.heights == [8]
    assert towers.level_sets == [[0, 1, 2, 3]]
    assert towers.seed is None


def test_towers_config_validation():
    """Test TowersConfig validation collects every bad field."""
    with pytest.raises(ConfigurationError) as excinfo:
        TowersConfig.from_dict({"map": "baker", "height": 2, "level_sets": [[9]], "transpositions": 0})
    message = excinfo.value.message
    assert "towers.map" in message
    assert "height must be >= 3" in message
    assert "transpositions must be >= 1" in message


def test_output_config_validation():
    assert OutputConfig.from_dict({}).formats == ["json", "csv"]
    with pytest.raises(ConfigurationError):
        OutputConfig.from_dict({"formats": ["xml"]})


def test_experiment_config_creation(small_config_data):
    """Test ExperimentConfig creation from dictionary."""
    config = ExperimentConfig.from_dict(small_config_data)

    assert config.resolution == 1024
    assert config.epsilon == Fraction(1, 2)
    assert config.map_kind == "scrambler"
    assert config.target_sets[0].pieces == (Cylinder({0: 0}),)
    assert isinstance(config.towers, TowersConfig)
    assert config.towers.heights == [4, 8]
    assert config.output.formats == ["json", "csv"]
    assert config.logging["level"] == "INFO"
    assert config.independence_window is None


def test_target_sets_accept_unions(small_config_data):
    small_config_data["target_sets"] = [[{"0": 0}, {"0": 1, "1": 1}], {"-1": 1}]
    config = ExperimentConfig.from_dict(small_config_data)

    assert config.target_sets[0].measure == Fraction(3, 4)
    assert isinstance(config.target_sets[1], CylinderUnion)
    assert config.target_sets[1].rank == 1


def test_experiment_config_rejects_floats(small_config_data):
    small_config_data["epsilon"] = 0.5
    with pytest.raises(ConfigurationError, match="epsilon"):
        ExperimentConfig.from_dict(small_config_data)


def test_atoms_unrealizable(small_config_data):
    """Test that resolution_log2 = 1 with k = 1 is rejected with a precise diagnostic."""
    small_config_data["resolution_log2"] = 1
    small_config_data["k"] = 1
    with pytest.raises(ConfigurationError, match="atoms unrealizable"):
        ExperimentConfig.from_dict(small_config_data)


def test_target_rank_counts_towards_realizability(small_config_data):
    small_config_data["resolution_log2"] = 4
    small_config_data["target_sets"] = [{"2": 1}]
    with pytest.raises(ConfigurationError, match="needs >= 5"):
        ExperimentConfig.from_dict(small_config_data)


def test_experiment_config_collects_errors(small_config_data):
    small_config_data.update({"window": 0, "seed": 2 ** 64, "map": "baker", "independence_window": 1})
    small_config_data["window"] = 3
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_dict(small_config_data)
    message = excinfo.value.message
    assert "seed must fit in 64 bits" in message
    assert "map must be one of" in message
    assert "independence_window must be >= rank + window = 3" in message


def test_independence_window_counts_target_rank(small_config_data):
    """A rank-1 target needs M >= 1 + W even when k = 0."""
    small_config_data.update({"window": 2, "independence_window": 2, "target_sets": [{"1": 1}]})
    expected = r"independence_window must be >= rank \+ window = 3 for rank 1"
    with pytest.raises(ConfigurationError, match=expected):
        ExperimentConfig.from_dict(small_config_data)
    small_config_data["independence_window"] = 3
    assert ExperimentConfig.from_dict(small_config_data).independence_window == 3


@pytest.mark.parametrize("key", ["k", "window", "trials", "resolution_log2"])
def test_null_integer_fields_are_rejected(small_config_data, key):
    small_config_data[key] = None
    manager = ConfigManager()
    with pytest.raises(ConfigurationError, match=f"{key} must be an integer"):
        manager.set_test_config(small_config_data)


def test_null_optional_fields_stay_unset(small_config_data):
    small_config_data["independence_window"] = None
    small_config_data["towers"]["seed"] = None
    config = ExperimentConfig.from_dict(small_config_data)
    assert config.independence_window is None
    assert config.towers.seed is None


def test_metrics_and_independence_sections(small_config_data):
    small_config_data["metrics"] = {"maps": ["first.json", "second.json"], "basis": "basis.json"}
    small_config_data["independence"] = {"window": 4, "delta": "1/100"}
    config = ExperimentConfig.from_dict(small_config_data)
    assert config.metrics.maps == ["first.json", "second.json"]
    assert config.metrics.basis == "basis.json"
    assert config.independence.window == 4
    assert config.independence.delta == Fraction(1, 100)
    assert ExperimentConfig.from_dict(config.to_dict()).independence.delta == Fraction(1, 100)

    defaults = ExperimentConfig.from_dict({})
    assert defaults.metrics.maps is None
    assert defaults.independence.delta is None


def test_metrics_and_independence_sections_are_validated(small_config_data):
    small_config_data["metrics"] = {"maps": ["only.json"], "basis": "basis.json"}
    small_config_data["independence"] = {"window": 0, "delta": 0.01}
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_dict(small_config_data)
    message = excinfo.value.message
    assert "metrics.maps must be a list of two map file paths" in message
    assert "metrics.basis needs metrics.maps" in message
    assert "window must be >= 1, got 0" in message
    assert "independence.delta" in message


def test_overrides_merge_sections(small_config_data):
    config = ExperimentConfig.from_dict(small_config_data)
    updated = config.with_overrides({"seed": 99, "window": None, "towers": {"height": 16, "k": None}})

    assert updated.seed == 99
    assert updated.window == 2
    assert updated.towers.height == 16
    assert updated.towers.k == 4
    assert config.seed == 7


def test_config_round_trips_through_dict(small_config_data):
    config = ExperimentConfig.from_dict(small_config_data)
    again = ExperimentConfig.from_dict(config.to_dict())
    assert again.to_dict() == config.to_dict()


def test_config_manager_load_config(config_file_path, small_config_data):
    """Test configuration loading from file."""
    with open(config_file_path, 'w') as f:
        json.dump(small_config_data, f, indent=4)

    config_manager = ConfigManager(config_file_path, 'config/config_schema.json')
    config = config_manager.load_config()

    assert isinstance(config, ExperimentConfig)
    assert config.seed == small_config_data['seed']
    assert config_manager.config is config


def test_config_manager_schema_mismatch(config_file_path, small_config_data):
    small_config_data["map"] = "baker"
    with open(config_file_path, 'w') as f:
        json.dump(small_config_data, f)

    with pytest.raises(ConfigurationError, match="does not match schema"):
        ConfigManager(config_file_path, 'config/config_schema.json').load_config()


def test_config_manager_missing_file():
    """Test handling of missing configuration file."""
    config_manager = ConfigManager('nonexistent.json')

    with pytest.raises(ConfigurationError, match="Configuration file not found"):
        config_manager.load_config()


def test_config_manager_invalid_json(config_file_path):
    """Test handling of invalid JSON in config file."""
    with open(config_file_path, 'w') as f:
        f.write('invalid json')

    config_manager = ConfigManager(config_file_path)

    with pytest.raises(ConfigurationError, match="Invalid JSON"):
        config_manager.load_config()


def test_output_directory_from_environment(config_file_path, small_config_data, tmp_path):
    with open(config_file_path, 'w') as f:
        json.dump(small_config_data, f)

    target = str(tmp_path / "elsewhere")
    with patch.dict(os.environ, {OUTPUT_DIR_ENV: target}):
        config = ConfigManager(config_file_path).load_config()
    assert config.output.directory == target


def test_shipped_demo_config_loads():
    config = ConfigManager('config/demo_config.json', 'config/config_schema.json').load_config()

    assert config.resolution_log2 == 14
    assert config.k == 0
    assert config.epsilon == Fraction(1, 2)
    assert config.window == 3
    assert config.independence_window == 3


def test_config_manager_get_test_config(small_config_data):
    """Test getting test configuration with explicit values."""
    config_manager = ConfigManager()
    with pytest.raises(ConfigurationError, match="Test configuration not set"):
        config_manager.get_test_config()

    config_manager.set_test_config(small_config_data)
    test_config = config_manager.get_test_config()

    assert isinstance(test_config, ExperimentConfig)
    assert test_config.trials == 16
    assert test_config.towers.perturbations == 3
    assert test_config.config_version == 1
