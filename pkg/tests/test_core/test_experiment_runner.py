"""Tests for the ExperimentRunner and RunRecord."""
import json

import pytest

from src.core.config_manager import ConfigManager, ExperimentConfig
from src.core.experiment_runner import ExperimentRunner, RunRecord, run_experiment
from src.core.maps import cyclic_shift, transposition_perturbation
from src.core.measure_core import CellSet, GridMap, GridSpace
from src.core.topology import Basis, dyadic_basis, metric_a, metric_d, metric_tau
from src.utils.exceptions import ConfigurationError, PrecisionUnattainableError, ValidationError
from src.utils.rationals import canonical_json, content_hash, format_rational


@pytest.fixture
def small_config(small_config_data):
    return ExperimentConfig.from_dict(small_config_data)


def make_record(verdicts, timings=None):
    return RunRecord(
        config={"seed": 1},
        input_hash=content_hash({"seed": 1}),
        stages={"metrics": {"d": "1/4"}},
        verdicts=verdicts,
        tables={"deviations": []},
        timings=timings or {},
    )


def test_run_record_round_trip():
    record = make_record({"rank_one": True}, {"metrics": 0.5})
    again = RunRecord.from_dict(record.to_dict(), record.timings)
    assert again == record
    assert again.timings == {"metrics": 0.5}
    assert "timings" not in record.to_dict()


def test_run_record_missing_key():
    data = make_record({}).to_dict()
    del data["verdicts"]
    with pytest.raises(ValidationError, match="verdicts"):
        RunRecord.from_dict(data)


def test_content_hash_ignores_timings():
    first = make_record({"openness": True}, {"towers": 1.0})
    second = make_record({"openness": True}, {"towers": 7.0})
    assert first == second
    assert first.content_hash == second.content_hash
    assert first.content_hash != make_record({"openness": False}).content_hash


def test_all_passed():
    assert make_record({}).all_passed
    assert make_record({"rank_one": True, "openness": True}).all_passed
    assert not make_record({"rank_one": True, "openness": False}).all_passed


def test_unknown_stage(small_config):
    with pytest.raises(ValidationError, match="unknown stages"):
        ExperimentRunner(small_config).run(["metrics", "baking"])


def test_metrics_stage(small_config):
    record = run_experiment(small_config, ["metrics"])
    metrics = record.stages["metrics"]
    assert list(record.stages) == ["metrics"]
    assert record.verdicts == {}
    assert metrics["inputs"]["map"] == "scrambler"
    assert metrics["window"] == 2
    assert sorted(metrics["fixed_fractions"]) == ["1", "2"]
    assert len(metrics["inputs"]["perturbation"]) == 1
    assert record.tables["metrics"] == [{"d": metrics["d"], "a": metrics["a"], "tau": metrics["tau"], "W": 2}]
    assert "/" in metrics["tail_bound"]
    assert metrics["cycles"] >= 1
    assert "metrics" in record.timings


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_metrics_of_serialized_maps(small_config, tmp_path):
    space = GridSpace(16)
    first = cyclic_shift(space)
    second = transposition_perturbation(first, [(0, 8)])
    basis = Basis([space.interval(0, 4), CellSet(space, range(0, 16, 2))])
    paths = [write_json(tmp_path / "first.json", first.to_dict()),
             write_json(tmp_path / "second.json", second.to_dict())]

    config = small_config.with_overrides({"metrics": {"maps": paths}})
    record = run_experiment(config, ["metrics"])
    metrics = record.stages["metrics"]
    assert metrics["d"] == format_rational(metric_d(first, second, dyadic_basis(space)))
    assert metrics["inputs"] == {"first": content_hash(first.to_dict()),
                                 "second": content_hash(second.to_dict())}
    assert metrics["cycles"] == 1

    basis_path = write_json(tmp_path / "basis.json", basis.to_dict())
    config = small_config.with_overrides({"metrics": {"maps": paths, "basis": basis_path}})
    record = run_experiment(config, ["metrics"])
    row = record.tables["metrics"][0]
    assert row["d"] == format_rational(metric_d(first, second, basis))
    assert row["a"] == format_rational(metric_a(first, second, basis))
    assert row["tau"] == format_rational(metric_tau(first, second, basis, 2))
    assert row["W"] == 2
    assert record.stages["metrics"]["basis_size"] == 2
    assert record.stages["metrics"]["inputs"]["basis"] == content_hash(basis.to_dict())


def test_unreadable_or_malformed_map_files(small_config, tmp_path):
    good = write_json(tmp_path / "good.json", GridMap.identity(GridSpace(16)).to_dict())
    config = small_config.with_overrides({"metrics": {"maps": [good, str(tmp_path / "missing.json")]}})
    with pytest.raises(ConfigurationError, match="cannot read map file"):
        run_experiment(config, ["metrics"])

    bad = write_json(tmp_path / "bad.json", {"resolution": 16, "forward": [0] * 16})
    config = small_config.with_overrides({"metrics": {"maps": [good, bad]}})
    with pytest.raises(ConfigurationError, match="malformed map file"):
        run_experiment(config, ["metrics"])


def test_config_echo(small_config):
    record = run_experiment(small_config, ["metrics"])
    assert "directory" not in record.config["output"]
    assert record.config["epsilon"] == "1/2"
    assert record.input_hash == content_hash(record.config)


def test_independence_stage(small_config):
    record = run_experiment(small_config, ["independence"])
    stage = record.stages["independence"]
    assert set(record.verdicts) == {"independence_search"}
    assert stage["ledger"]["delta"] == "1/240"
    assert stage["search"]["success"] == record.verdicts["independence_search"]
    assert "lemma_audit" in stage


def test_independence_stage_with_window_and_delta(small_config):
    config = small_config.with_overrides({"independence": {"window": 1, "delta": "1/100"}})
    record = run_experiment(config, ["independence"])
    search = record.stages["independence"]["search"]
    assert search["target"] == "1/100"
    assert search["window"] == 1
    assert record.stages["independence"]["lemma_audit"]["cardinality_bound"] == 2
    assert record.verdicts["independence_search"] == search["success"]


def test_full_pipeline(small_config):
    record = run_experiment(small_config)
    assert list(record.stages) == ["metrics", "conjugate", "towers"]
    assert set(record.verdicts) == {"conjugacy_certificate", "neighborhood_membership", "rank_one", "openness"}

    # two rank-0 atoms over |m| <= 2
    assert len(record.tables["deviations"]) == 20
    assert set(record.tables["deviations"][0]) == {"u", "v", "m", "t_side", "v_side", "deviation"}
    assert len(record.tables["openness"]) == 3
    assert record.stages["conjugate"]["lemma_audit"]["cardinality_bound"] == 2

    # odometer levels with ten toggled cells stay well inside 1/4
    assert record.verdicts["rank_one"]
    assert record.verdicts["openness"]
    assert record.stages["towers"]["notes"] == []


def test_runs_are_deterministic(small_config):
    first = run_experiment(small_config)
    second = run_experiment(small_config)
    assert canonical_json(first.to_dict()) == canonical_json(second.to_dict())
    assert first.content_hash == second.content_hash


def test_seed_changes_the_record(small_config):
    first = run_experiment(small_config, ["metrics"])
    second = run_experiment(small_config.with_overrides({"seed": 8}), ["metrics"])
    assert first.input_hash != second.input_hash


def test_failed_tower_precondition_is_a_verdict(small_config):
    """Identity has no tower of height 8, so 300 toggled cells leave accuracy 300/1024 >= 1/4."""
    config = small_config.with_overrides({"towers": {"map": "identity", "toggled_cells": 300}})
    record = run_experiment(config, ["towers"])
    assert record.verdicts == {"rank_one": False, "openness": False}
    assert record.stages["towers"]["openness"] == []
    assert "not below 1/k" in record.stages["towers"]["notes"][0]
    assert record.tables["openness"] == []


def test_unreachable_target_rank_propagates(small_config):
    config = small_config.with_overrides({"target_sets": [{"2": 1}]})
    with pytest.raises(PrecisionUnattainableError):
        run_experiment(config, ["conjugate"])


@pytest.mark.slow
def test_shipped_config_is_byte_stable():
    """Two full runs of the demo config give identical canonical records."""
    config = ConfigManager('config/demo_config.json', 'config/config_schema.json').load_config()
    first = run_experiment(config)
    second = run_experiment(config)
    assert canonical_json(first.to_dict()) == canonical_json(second.to_dict())
    assert len(first.tables["deviations"]) == 7 * 2 * 2
    assert len(first.tables["openness"]) == 10
