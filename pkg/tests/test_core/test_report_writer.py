"""Tests for report emission."""
import json
import os

import pytest

from src.core.experiment_runner import RunRecord
from src.core.report_writer import (RECORD_FILE, TABLE_COLUMNS, TIMINGS_FILE, emit_reports, load_record,
                                    write_table)
from src.utils.exceptions import ValidationError
from src.utils.rationals import canonical_json, content_hash


@pytest.fixture
def record():
    config = {"seed": 3, "epsilon": "1/2"}
    return RunRecord(
        config=config,
        input_hash=content_hash(config),
        stages={"conjugate": {"verdict": True}},
        verdicts={"conjugacy_certificate": True},
        tables={"deviations": [
            {"u": 0, "v": 1, "m": -1, "t_side": "1/4", "v_side": "1/4", "deviation": "0"},
            {"u": 1, "v": 1, "m": 0, "t_side": "1/2", "v_side": "513/1024", "deviation": "1/1024"},
        ]},
        timings={"conjugate": 0.25},
    )


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def test_emit_json_and_csv(record, tmp_path):
    written = emit_reports(record, ["json", "csv"], str(tmp_path))
    names = [os.path.basename(path) for path in written]
    assert names == [RECORD_FILE, TIMINGS_FILE, "deviations.csv", "openness.csv", "metrics.csv"]
    assert read_bytes(tmp_path / RECORD_FILE).decode() == canonical_json(record.to_dict())


def test_deviation_table_layout(record, tmp_path):
    emit_reports(record, ["csv"], str(tmp_path))
    assert read_bytes(tmp_path / "deviations.csv") == (
        b"u,v,m,t_side,v_side,deviation\n"
        b"0,1,-1,1/4,1/4,0\n"
        b"1,1,0,1/2,513/1024,1/1024\n"
    )


def test_missing_table_gives_header_only_file(record, tmp_path):
    emit_reports(record, ["csv"], str(tmp_path))
    header = ",".join(TABLE_COLUMNS["openness"]) + "\n"
    assert read_bytes(tmp_path / "openness.csv") == header.encode()
    assert not (tmp_path / RECORD_FILE).exists()


def test_files_use_lf_line_endings(record, tmp_path):
    for path in emit_reports(record, ["json", "csv"], str(tmp_path)):
        content = read_bytes(path)
        assert b"\r\n" not in content
        assert content.endswith(b"\n")


def test_record_round_trip(record, tmp_path):
    emit_reports(record, ["json"], str(tmp_path))
    loaded = load_record(str(tmp_path))
    assert loaded == record
    assert loaded.timings == {"conjugate": 0.25}
    assert loaded.content_hash == record.content_hash


def test_timings_sidecar_is_optional(record, tmp_path):
    emit_reports(record, ["json"], str(tmp_path))
    os.remove(tmp_path / TIMINGS_FILE)
    assert load_record(str(tmp_path)).timings == {}
    with open(tmp_path / RECORD_FILE) as f:
        assert "timings" not in json.load(f)


def test_output_directory_is_created(record, tmp_path):
    target = tmp_path / "nested" / "results"
    emit_reports(record, ["json"], str(target))
    assert (target / RECORD_FILE).exists()


def test_unknown_format(record, tmp_path):
    with pytest.raises(ValidationError, match="unknown report formats"):
        emit_reports(record, ["json", "xml"], str(tmp_path))
    assert not any(tmp_path.iterdir())


def test_write_table_keeps_column_order(tmp_path):
    path = write_table([{"b": "1/2", "a": 1}], ["a", "b"], str(tmp_path / "t.csv"))
    assert read_bytes(path) == b"a,b\n1,1/2\n"


def test_metrics_table_layout(record, tmp_path):
    record.tables["metrics"] = [{"d": "3/16", "a": "1/8", "tau": "1/4", "W": 2}]
    emit_reports(record, ["csv"], str(tmp_path))
    assert read_bytes(tmp_path / "metrics.csv") == b"d,a,tau,W\n3/16,1/8,1/4,2\n"
