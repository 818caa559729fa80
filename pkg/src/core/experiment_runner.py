"""
Experiment coordination.

This module drives the workbench stages from one ExperimentConfig:
- map diagnostics and metrics
- the half-measure independence search with the lemma audit
- the full conjugacy pipeline and its certificate
- towers, rank-one membership, openness under perturbations and rigidity
and assembles them into a deterministic RunRecord.
"""
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .config_manager import ExperimentConfig
from .conjugacy import BudgetLedger, theorem_one_demo
from .independence import SetFamily, find_half_measure_independent_set, lemma_cdelta_check
from .maps import build_named_map, random_transpositions, transposition_perturbation
from .measure_core import CellSet, GridMap, GridSpace
from .topology import Basis, dyadic_basis, metric_a, metric_d, metric_tau
from .towers import (build_tower, openness_certificate, partial_rigidity_coefficient,
                     rank_one_membership, rank_one_profile)
from ..utils.exceptions import ConfigurationError, ValidationError, WorkbenchException
from ..utils.random_streams import make_generator
from ..utils.rationals import content_hash, to_canonical

# Configure module logger
logger = logging.getLogger(__name__)
logger.propagate = True

METRIC_STREAM = 1 << 40
TOGGLE_STREAM = 1 << 32

StageResult = Tuple[Dict[str, Any], Dict[str, bool], Dict[str, List[Dict[str, Any]]]]


def _load_serialized(path: str, kind: str, decode: Callable[[Dict[str, Any]], Any]) -> Any:
    """Read a serialized GridMap or Basis.

    Raises:
        ConfigurationError: If the file is unreadable or does not decode.
    """
    try:
        with open(path, "r") as f:
            return decode(json.load(f))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read {kind} file {path}: {e}")
    except (KeyError, TypeError, ValueError, WorkbenchException) as e:
        raise ConfigurationError(f"malformed {kind} file {path}: {getattr(e, 'message', e)}")


@dataclass
class RunRecord:
    """Canonical outcome of a run; everything but the timings is byte-stable."""
    config: Dict[str, Any]
    input_hash: str
    stages: Dict[str, Any]
    verdicts: Dict[str, bool]
    tables: Dict[str, List[Dict[str, Any]]]
    timings: Dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def all_passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def content_hash(self) -> str:
        return content_hash(self.to_dict())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "input_hash": self.input_hash,
            "stages": self.stages,
            "verdicts": self.verdicts,
            "tables": self.tables,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], timings: Optional[Dict[str, float]] = None) -> "RunRecord":
        try:
            return cls(
                config=data["config"],
                input_hash=data["input_hash"],
                stages=data["stages"],
                verdicts=data["verdicts"],
                tables=data["tables"],
                timings=dict(timings or {}),
            )
        except KeyError as e:
            raise ValidationError(f"run record is missing {e}")


class ExperimentRunner:
    """
    Runs the configured stages in a fixed order.

    Every random draw comes from a Philox stream keyed by the configured seed
    and a stage-specific stream index, so two runs of one config agree byte
    for byte.
    """

    def __init__(self, config: ExperimentConfig):
        logger.info("Initializing ExperimentRunner")
        self.config = config
        self.space = GridSpace.from_log2(config.resolution_log2)
        self._transformation: Optional[GridMap] = None

    @property
    def transformation(self) -> GridMap:
        if self._transformation is None:
            self._transformation = build_named_map(self.config.map_kind, self.space, self.config.seed)
        return self._transformation

    def _metric_inputs(self) -> Tuple[GridMap, GridMap, Basis, Dict[str, Any]]:
        """The two maps and the basis the metrics stage compares, with an echo of where they came from."""
        metrics = self.config.metrics
        if metrics.maps is None:
            pairs = random_transpositions(self.space, 1, self.config.seed, METRIC_STREAM)
            inputs = {"map": self.config.map_kind, "perturbation": [list(pair) for pair in pairs]}
            transformation = self.transformation
            return (transformation, transposition_perturbation(transformation, pairs),
                    dyadic_basis(self.space), inputs)

        first, second = (_load_serialized(path, "map", GridMap.from_dict) for path in metrics.maps)
        inputs = {"first": content_hash(first.to_dict()), "second": content_hash(second.to_dict())}
        if metrics.basis is None:
            basis = dyadic_basis(first.space)
        else:
            basis = _load_serialized(metrics.basis, "basis", Basis.from_dict)
            inputs["basis"] = content_hash(basis.to_dict())
        return first, second, basis, inputs

    def metrics_stage(self) -> StageResult:
        """Distances d, a and tau_W between two maps, plus cycle diagnostics of the first."""
        first, second, basis, inputs = self._metric_inputs()
        window = self.config.window
        d = metric_d(first, second, basis)
        a = metric_a(first, second, basis)
        tau = metric_tau(first, second, basis, window)
        lengths = first.cycle_lengths()
        stage = {
            "inputs": inputs,
            "basis_size": len(basis),
            "tail_bound": basis.tail_bound,
            "d": d,
            "a": a,
            "tau": tau,
            "window": window,
            "cycles": int(len(lengths)),
            "shortest_cycle": first.shortest_cycle(),
            "longest_cycle": int(lengths.max()),
            "fixed_fractions": {str(n): first.fixed_fraction(n) for n in range(1, window + 1)},
        }
        return stage, {}, {"metrics": [{"d": d, "a": a, "tau": tau, "W": window}]}

    def independence_stage(self) -> StageResult:
        """Half-measure search for ``independence.delta`` (default: the ledger's target) and window M."""
        config = self.config
        ledger = BudgetLedger.from_epsilon(config.epsilon, config.k)
        window = config.independence.window or config.independence_window or config.k + config.window
        delta = ledger.well_target if config.independence.delta is None else config.independence.delta
        cardinality = min(4 * config.k + 2, 2 * window + 1)
        search = find_half_measure_independent_set(self.transformation, window, delta, config.seed,
                                                   config.trials, cardinality, config.scan_budget)
        lemma = lemma_cdelta_check(SetFamily.orbit(self.transformation, search.subset, window),
                                   cardinality, config.scan_budget)
        stage = {"ledger": ledger.to_dict(), "search": search.to_dict(), "lemma_audit": lemma.to_dict()}
        return stage, {"independence_search": search.success}, {}

    def conjugacy_stage(self) -> StageResult:
        config = self.config
        run = theorem_one_demo(self.transformation, config.target_sets, config.epsilon, config.window,
                               config.max_rank, config.seed, config.trials, config.independence_window,
                               config.scan_budget, rank_floor=config.k)
        cardinality = min(4 * run.ledger.k + 2, 2 * run.independence_window + 1)
        lemma = lemma_cdelta_check(SetFamily.orbit(self.transformation, run.search.subset,
                                                   run.independence_window),
                                   cardinality, config.scan_budget)
        stage = run.to_dict()
        stage["lemma_audit"] = lemma.to_dict()
        verdicts = {
            "conjugacy_certificate": run.certificate.passed,
            "neighborhood_membership": run.membership.contained,
        }
        return stage, verdicts, {"deviations": run.certificate.csv_rows()}

    def _tower_test_sets(self, transformation: GridMap, seed: int) -> List[CellSet]:
        towers = self.config.towers
        tower = build_tower(transformation, towers.height)
        sets = []
        for position, levels in enumerate(towers.level_sets):
            subset = tower.level_union(levels)
            if towers.toggled_cells:
                generator = make_generator(seed, TOGGLE_STREAM + position)
                noise = generator.choice(self.space.resolution, size=towers.toggled_cells, replace=False)
                subset = subset ^ CellSet(self.space, noise)
            sets.append(subset)
        return sets

    def towers_stage(self) -> StageResult:
        towers = self.config.towers
        seed = self.config.seed if towers.seed is None else towers.seed
        transformation = build_named_map(towers.map_kind, self.space, seed)
        sets = self._tower_test_sets(transformation, seed)
        threshold = Fraction(1, towers.k)

        membership = rank_one_membership(transformation, sets, towers.k, towers.heights)
        profile = rank_one_profile(transformation, sets, sorted({1, towers.k}), towers.heights)
        tower = build_tower(transformation, towers.height)
        rigidity = partial_rigidity_coefficient(transformation, sets, towers.rigidity_window)

        certificates, rows, notes = [], [], []
        for index in range(towers.perturbations):
            pairs = random_transpositions(self.space, towers.transpositions, seed, index)
            perturbed = transposition_perturbation(transformation, pairs)
            try:
                certificate = openness_certificate(transformation, tower, towers.k, sets, perturbed)
            except ValidationError as e:
                notes.append(f"perturbation {index}: {e.message}")
                logger.warning(f"Openness precondition failed: {e.message}")
                break
            certificates.append(certificate)
            rows.append({
                "perturbation": index,
                "b": certificate.b,
                "neighborhood_b": certificate.neighborhood_b,
                "b_eff": certificate.b_eff,
                "within_b": certificate.within_b,
                "perturbed_accuracy": certificate.perturbed_accuracy,
                "chain_holds": certificate.chain_holds,
                "pass": certificate.passed,
            })

        openness_ok = bool(certificates) or towers.perturbations == 0
        openness_ok = openness_ok and all(c.passed and c.chain_holds for c in certificates if c.within_b)
        stage = {
            "map": towers.map_kind,
            "threshold": threshold,
            "rank_one": membership.to_dict(),
            "profile": [entry.to_dict() for entry in profile],
            "openness": [certificate.to_dict() for certificate in certificates],
            "rigidity_window": towers.rigidity_window,
            "rigidity_coefficient": rigidity,
            "notes": notes,
        }
        verdicts = {"rank_one": membership.verdict, "openness": openness_ok}
        return stage, verdicts, {"openness": rows}

    STAGES: Dict[str, Callable[["ExperimentRunner"], StageResult]] = {
        "metrics": metrics_stage,
        "independence": independence_stage,
        "conjugate": conjugacy_stage,
        "towers": towers_stage,
    }
    FULL_PIPELINE = ("metrics", "conjugate", "towers")

    def run(self, stages: Optional[Sequence[str]] = None) -> RunRecord:
        """
        Run ``stages`` (default: metrics, conjugate, towers) in that order.

        Raises:
            ValidationError: If a stage name is unknown.
        """
        stages = list(stages or self.FULL_PIPELINE)
        unknown = [name for name in stages if name not in self.STAGES]
        if unknown:
            raise ValidationError(f"unknown stages {unknown}; choose from {sorted(self.STAGES)}")

        config_echo = to_canonical(self.config.to_dict())
        config_echo["output"].pop("directory", None)
        results, verdicts, tables, timings = {}, {}, {}, {}
        for name in stages:
            logger.info(f"Running stage '{name}'")
            started = time.perf_counter()
            stage, stage_verdicts, stage_tables = self.STAGES[name](self)
            timings[name] = time.perf_counter() - started
            results[name] = to_canonical(stage)
            verdicts.update(stage_verdicts)
            tables.update({key: to_canonical(rows) for key, rows in stage_tables.items()})
            logger.info(f"Stage '{name}' finished in {timings[name]:.2f}s: {stage_verdicts}")

        record = RunRecord(config_echo, content_hash(config_echo), results, verdicts, tables, timings)
        logger.info(f"Run complete: verdicts {verdicts}, content hash {record.content_hash}")
        return record


def run_experiment(config: ExperimentConfig, stages: Optional[Sequence[str]] = None) -> RunRecord:
    """Run the configured pipeline and return its RunRecord."""
    return ExperimentRunner(config).run(stages)
