"""Canonical report files for a RunRecord: JSON record, CSV tables, timing sidecar."""
import json
import logging
import os
from typing import Dict, Iterable, List

import pandas as pd

from .experiment_runner import RunRecord
from ..utils.exceptions import ValidationError
from ..utils.rationals import canonical_json

logger = logging.getLogger(__name__)
logger.propagate = True

RECORD_FILE = "run_record.json"
TIMINGS_FILE = "timings.json"
TABLE_COLUMNS: Dict[str, List[str]] = {
    "deviations": ["u", "v", "m", "t_side", "v_side", "deviation"],
    "openness": ["perturbation", "b", "neighborhood_b", "b_eff", "within_b",
                 "perturbed_accuracy", "chain_holds", "pass"],
    "metrics": ["d", "a", "tau", "W"],
}


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_table(rows: List[Dict], columns: List[str], path: str) -> str:
    """One CSV with a fixed header; an empty table gives a header-only file."""
    frame = pd.DataFrame(rows, columns=columns)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def emit_reports(record: RunRecord, formats: Iterable[str], output_dir: str) -> List[str]:
    """
    Write the record in the requested formats.

    ``json`` writes the canonical record plus a timings sidecar; ``csv``
    writes one file per known table (header-only when the table is empty or
    the stage did not run). I/O errors propagate unchanged.

    Returns:
        Paths written, in order.
    """
    formats = list(formats)
    unknown = [fmt for fmt in formats if fmt not in ("json", "csv")]
    if unknown:
        raise ValidationError(f"unknown report formats {unknown}")
    os.makedirs(output_dir, exist_ok=True)

    written = []
    if "json" in formats:
        path = os.path.join(output_dir, RECORD_FILE)
        _write_text(path, canonical_json(record.to_dict()))
        written.append(path)
        path = os.path.join(output_dir, TIMINGS_FILE)
        _write_text(path, json.dumps(record.timings, sort_keys=True, indent=2) + "\n")
        written.append(path)
    if "csv" in formats:
        for name, columns in TABLE_COLUMNS.items():
            path = os.path.join(output_dir, f"{name}.csv")
            written.append(write_table(record.tables.get(name, []), columns, path))
    logger.info(f"Wrote {len(written)} report files to {output_dir}")
    return written


def load_record(output_dir: str) -> RunRecord:
    """Read a record written by ``emit_reports``; timings come from the sidecar when present."""
    with open(os.path.join(output_dir, RECORD_FILE), "r", encoding="utf-8") as f:
        data = json.load(f)
    timings = {}
    timings_path = os.path.join(output_dir, TIMINGS_FILE)
    if os.path.exists(timings_path):
        with open(timings_path, "r", encoding="utf-8") as f:
            timings = json.load(f)
    return RunRecord.from_dict(data, timings)
