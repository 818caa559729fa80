"""Configuration management for workbench experiments."""
import os
import json
from fractions import Fraction
from typing import Dict, Any, List, Optional

from .maps import MAP_FACTORIES
from .symbolic import Cylinder, CylinderUnion
from .config_validator import ConfigValidator
from ..utils.exceptions import ConfigurationError, WorkbenchException
from ..utils.rationals import parse_rational

OUTPUT_DIR_ENV = "WORKBENCH_OUTPUT_DIR"
MAP_KINDS = sorted(list(MAP_FACTORIES) + ["random"])
REPORT_FORMATS = ("json", "csv")


def _int_field(data: Dict[str, Any], key: str, default: Optional[int], errors: List[str],
               minimum: Optional[int] = None) -> Optional[int]:
    value = data.get(key, default)
    if value is None and default is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{key} must be an integer")
        return default
    if minimum is not None and value < minimum:
        errors.append(f"{key} must be >= {minimum}, got {value}")
        return default
    return value


def _parse_target_set(raw: Any) -> CylinderUnion:
    """A target set is one cylinder map or a list of disjoint cylinder maps."""
    pieces = raw if isinstance(raw, list) else [raw]
    return CylinderUnion(Cylinder.from_dict(piece) for piece in pieces)


class TowersConfig:
    """Parameters of the tower / openness experiment."""

    def __init__(
        self,
        map_kind: str = "odometer",
        height: int = 8,
        k: int = 4,
        heights: Optional[List[int]] = None,
        level_sets: Optional[List[List[int]]] = None,
        toggled_cells: int = 0,
        perturbations: int = 10,
        transpositions: int = 1,
        seed: Optional[int] = None,
        rigidity_window: int = 8,
    ):
        self.map_kind = map_kind
        self.height = height
        self.k = k
        self.heights = heights or [height]
        self.level_sets = level_sets if level_sets is not None else [[0, 1, 2, 3]]
        self.toggled_cells = toggled_cells
        self.perturbations = perturbations
        self.transpositions = transpositions
        self.seed = seed
        self.rigidity_window = rigidity_window

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TowersConfig":
        """Create a TowersConfig from a dictionary.

        Raises:
            ConfigurationError: If validation fails.
        """
        errors = []
        map_kind = data.get("map", "odometer")
        if map_kind not in MAP_KINDS:
            errors.append(f"towers.map must be one of {MAP_KINDS}")
            map_kind = "odometer"
        height = _int_field(data, "height", 8, errors, minimum=3)
        k = _int_field(data, "k", 4, errors, minimum=1)

        heights = data.get("heights", [height])
        if not isinstance(heights, list) or not heights or not all(
                isinstance(h, int) and not isinstance(h, bool) and h >= 1 for h in heights):
            errors.append("towers.heights must be a nonempty list of positive integers")
            heights = [height]

        level_sets = data.get("level_sets", [[0, 1, 2, 3]])
        if not isinstance(level_sets, list) or not level_sets or not all(
                isinstance(levels, list) and all(isinstance(i, int) and 0 <= i < height for i in levels)
                for levels in level_sets):
            errors.append(f"towers.level_sets must be a nonempty list of level index lists in [0, {height})")
            level_sets = [[0]]

        toggled_cells = _int_field(data, "toggled_cells", 0, errors, minimum=0)
        perturbations = _int_field(data, "perturbations", 10, errors, minimum=0)
        transpositions = _int_field(data, "transpositions", 1, errors, minimum=1)
        seed = _int_field(data, "seed", None, errors, minimum=0)
        rigidity_window = _int_field(data, "rigidity_window", 8, errors, minimum=1)

        if errors:
            raise ConfigurationError(f"Invalid towers configuration: {'; '.join(errors)}")

        return cls(
            map_kind=map_kind,
            height=height,
            k=k,
            heights=heights,
            level_sets=level_sets,
            toggled_cells=toggled_cells,
            perturbations=perturbations,
            transpositions=transpositions,
            seed=seed,
            rigidity_window=rigidity_window,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map": self.map_kind,
            "height": self.height,
            "k": self.k,
            "heights": list(self.heights),
            "level_sets": [list(levels) for levels in self.level_sets],
            "toggled_cells": self.toggled_cells,
            "perturbations": self.perturbations,
            "transpositions": self.transpositions,
            "seed": self.seed,
            "rigidity_window": self.rigidity_window,
        }


class OutputConfig:
    """Where and in which formats reports are written."""

    def __init__(self, directory: str = "results", formats: Optional[List[str]] = None):
        self.directory = directory
        self.formats = list(formats) if formats is not None else list(REPORT_FORMATS)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OutputConfig":
        errors = []
        directory = data.get("directory", "results")
        if not isinstance(directory, str) or not directory:
            errors.append("output.directory must be a nonempty string")
            directory = "results"
        formats = data.get("formats", list(REPORT_FORMATS))
        if not isinstance(formats, list) or any(fmt not in REPORT_FORMATS for fmt in formats):
            errors.append(f"output.formats must be a list drawn from {list(REPORT_FORMATS)}")
            formats = list(REPORT_FORMATS)
        if errors:
            raise ConfigurationError(f"Invalid output configuration: {'; '.join(errors)}")
        return cls(directory=directory, formats=formats)

    def to_dict(self) -> Dict[str, Any]:
        return {"directory": self.directory, "formats": list(self.formats)}


class MetricsConfig:
    """Serialized inputs for the metrics stage.

    Without ``maps`` the stage compares the configured map with a seeded
    perturbation; without ``basis`` it uses the dyadic basis of the first map.
    """

    def __init__(self, maps: Optional[List[str]] = None, basis: Optional[str] = None):
        self.maps = list(maps) if maps is not None else None
        self.basis = basis

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsConfig":
        errors = []
        maps = data.get("maps")
        if maps is not None and (not isinstance(maps, list) or len(maps) != 2
                                 or not all(isinstance(path, str) and path for path in maps)):
            errors.append("metrics.maps must be a list of two map file paths")
            maps = None
        basis = data.get("basis")
        if basis is not None and (not isinstance(basis, str) or not basis):
            errors.append("metrics.basis must be a basis file path")
            basis = None
        if basis is not None and maps is None:
            errors.append("metrics.basis needs metrics.maps")
        if errors:
            raise ConfigurationError(f"Invalid metrics configuration: {'; '.join(errors)}")
        return cls(maps=maps, basis=basis)

    def to_dict(self) -> Dict[str, Any]:
        return {"maps": list(self.maps) if self.maps is not None else None, "basis": self.basis}


class IndependenceConfig:
    """Standalone half-measure search: image window M and target deviation delta."""

    def __init__(self, window: Optional[int] = None, delta: Optional[Fraction] = None):
        self.window = window
        self.delta = delta

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IndependenceConfig":
        errors = []
        window = _int_field(data, "window", None, errors, minimum=1)
        delta = None
        if data.get("delta") is not None:
            try:
                delta = parse_rational(data["delta"])
                if delta < 0:
                    errors.append("independence.delta must be >= 0")
            except WorkbenchException as e:
                errors.append(f"independence.delta: {e.message}")
        if errors:
            raise ConfigurationError(f"Invalid independence configuration: {'; '.join(errors)}")
        return cls(window=window, delta=delta)

    def to_dict(self) -> Dict[str, Any]:
        return {"window": self.window, "delta": self.delta}


class ExperimentConfig:
    """Experiment configuration parameters."""

    def __init__(
        self,
        resolution_log2: int,
        k: int,
        epsilon: Fraction,
        window: int,
        seed: int,
        trials: int,
        max_rank: int,
        map_kind: str,
        target_sets: List[CylinderUnion],
        towers: TowersConfig,
        output: OutputConfig,
        independence_window: Optional[int] = None,
        metrics: Optional[MetricsConfig] = None,
        independence: Optional[IndependenceConfig] = None,
        scan_budget: int = 2_000_000,
        logging: Dict[str, Any] = None,
        config_version: int = 1,
    ):
        self.resolution_log2 = resolution_log2
        self.k = k
        self.epsilon = epsilon
        self.window = window
        self.seed = seed
        self.trials = trials
        self.max_rank = max_rank
        self.map_kind = map_kind
        self.target_sets = target_sets
        self.towers = towers
        self.output = output
        self.independence_window = independence_window
        self.metrics = metrics or MetricsConfig()
        self.independence = independence or IndependenceConfig()
        self.scan_budget = scan_budget
        self.logging = logging or {}
        self.config_version = config_version

    @property
    def resolution(self) -> int:
        return 1 << self.resolution_log2

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Create an ExperimentConfig from a dictionary.

        All field problems are collected and reported together.

        Raises:
            ConfigurationError: If validation fails.
        """
        errors = []

        resolution_log2 = _int_field(data, "resolution_log2", 14, errors, minimum=1)
        k = _int_field(data, "k", 0, errors, minimum=0)
        window = _int_field(data, "window", 3, errors, minimum=1)
        trials = _int_field(data, "trials", 64, errors, minimum=1)
        max_rank = _int_field(data, "max_rank", 2, errors, minimum=0)
        scan_budget = _int_field(data, "scan_budget", 2_000_000, errors, minimum=1)
        independence_window = _int_field(data, "independence_window", None, errors, minimum=1)

        seed = _int_field(data, "seed", 0, errors, minimum=0)
        if seed is not None and seed >= 2 ** 64:
            errors.append("seed must fit in 64 bits")
            seed = 0

        try:
            epsilon = parse_rational(data.get("epsilon", "1/2"))
            if epsilon <= 0:
                errors.append("epsilon must be positive")
        except WorkbenchException as e:
            errors.append(f"epsilon: {e.message}")
            epsilon = Fraction(1, 2)

        map_kind = data.get("map", "scrambler")
        if map_kind not in MAP_KINDS:
            errors.append(f"map must be one of {MAP_KINDS}")
            map_kind = "scrambler"

        target_sets = []
        raw_sets = data.get("target_sets", [{"0": 0}])
        if not isinstance(raw_sets, list) or not raw_sets:
            errors.append("target_sets must be a nonempty list")
        else:
            for position, raw in enumerate(raw_sets):
                try:
                    target_sets.append(_parse_target_set(raw))
                except (WorkbenchException, AttributeError) as e:
                    errors.append(f"target_sets[{position}]: {e}")

        finest = max([k] + [subset.rank for subset in target_sets])
        if resolution_log2 < 2 * finest + 1:
            errors.append(f"atoms unrealizable: resolution_log2 = {resolution_log2} "
                          f"needs >= {2 * finest + 1} for rank {finest}")
        if independence_window is not None and independence_window < finest + window:
            errors.append(f"independence_window must be >= rank + window = {finest + window} "
                          f"for rank {finest}")

        try:
            towers = TowersConfig.from_dict(data.get("towers", {}))
        except ConfigurationError as e:
            errors.append(e.message)
            towers = TowersConfig()
        try:
            output = OutputConfig.from_dict(data.get("output", {}))
        except ConfigurationError as e:
            errors.append(e.message)
            output = OutputConfig()
        try:
            metrics = MetricsConfig.from_dict(data.get("metrics", {}))
        except ConfigurationError as e:
            errors.append(e.message)
            metrics = MetricsConfig()
        try:
            independence = IndependenceConfig.from_dict(data.get("independence", {}))
        except ConfigurationError as e:
            errors.append(e.message)
            independence = IndependenceConfig()

        logging = data.get("logging", {})
        if not isinstance(logging, dict):
            errors.append("logging must be an object")
            logging = {}
        config_version = _int_field(data, "config_version", 1, errors, minimum=1)

        if errors:
            raise ConfigurationError(f"Invalid experiment configuration: {'; '.join(errors)}")

        return cls(
            resolution_log2=resolution_log2,
            k=k,
            epsilon=epsilon,
            window=window,
            seed=seed,
            trials=trials,
            max_rank=max_rank,
            map_kind=map_kind,
            target_sets=target_sets,
            towers=towers,
            output=output,
            independence_window=independence_window,
            metrics=metrics,
            independence=independence,
            scan_budget=scan_budget,
            logging=logging,
            config_version=config_version,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Echo of the configuration; rationals stay Fractions for canonical encoding."""
        return {
            "resolution_log2": self.resolution_log2,
            "k": self.k,
            "epsilon": self.epsilon,
            "window": self.window,
            "independence_window": self.independence_window,
            "seed": self.seed,
            "trials": self.trials,
            "max_rank": self.max_rank,
            "scan_budget": self.scan_budget,
            "map": self.map_kind,
            "target_sets": [subset.to_dict() for subset in self.target_sets],
            "towers": self.towers.to_dict(),
            "output": self.output.to_dict(),
            "metrics": self.metrics.to_dict(),
            "independence": self.independence.to_dict(),
            "logging": dict(self.logging),
            "config_version": self.config_version,
        }

    def with_overrides(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with fields replaced; ``None`` values are ignored and nested sections merge."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key].update({name: item for name, item in value.items() if item is not None})
            else:
                data[key] = value
        return ExperimentConfig.from_dict(data)


class ConfigManager:
    """Manages configuration loading and validation."""

    def __init__(self, config_file_path: str = None, schema_path: str = None):
        """Initialize ConfigManager.

        Args:
            config_file_path: Path to the experiment configuration file.
            schema_path: Optional JSON schema checked before conversion.
        """
        self.config_file_path = config_file_path
        self.schema_path = schema_path
        self.config = None
        self._test_config = None
        self._test_config_data = None

    def load_config(self) -> ExperimentConfig:
        """Load configuration from file.

        Returns:
            ExperimentConfig instance, with the output directory taken from
            ``WORKBENCH_OUTPUT_DIR`` when that variable is set.

        Raises:
            ConfigurationError: If configuration loading fails.
        """
        if not self.config_file_path or not os.path.exists(self.config_file_path):
            raise ConfigurationError("Configuration file not found")

        try:
            with open(self.config_file_path, "r") as f:
                config_data = json.load(f)
        except json.JSONDecodeError:
            raise ConfigurationError("Invalid JSON in configuration file")
        except Exception as e:
            raise ConfigurationError(f"Failed to read configuration file: {e}")

        if self.schema_path:
            ConfigValidator(self.schema_path).validate_config(config_data)

        self.config = self.apply_environment(ExperimentConfig.from_dict(config_data))
        return self.config

    @staticmethod
    def apply_environment(config: ExperimentConfig) -> ExperimentConfig:
        override = os.getenv(OUTPUT_DIR_ENV)
        if override:
            config.output.directory = override
        return config

    def set_test_config(self, config_data: Dict[str, Any]) -> None:
        """Set test configuration.

        Args:
            config_data: Dictionary containing test configuration data.
        """
        self._test_config_data = config_data.copy()
        self._test_config = ExperimentConfig.from_dict(config_data)

    def get_test_config(self) -> ExperimentConfig:
        """Get test configuration.

        Raises:
            ConfigurationError: If test configuration is not set.
        """
        if self._test_config is None:
            raise ConfigurationError("Test configuration not set")
        return self._test_config
