"""CSV and JSON serialization of run records and sweeps.

Floats are written with 17 significant digits, which round-trips every IEEE
double exactly, so a CSV parsed back reproduces the in-memory frames bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .observables import CSV_COLUMNS, RunRecord

SWEEP_COLUMNS = ("value", "e_kin_final_mean", "e_kin_final_stderr", "trajectories")


def fmt(x) -> str:
    return f"{float(x):.17g}"


def record_rows(record: RunRecord) -> list[list[str]]:
    return [[fmt(v) for v in row] for row in record.table()]


def write_record_csv(record: RunRecord, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(record_rows(record))
    return path


def read_record_csv(path) -> dict[str, np.ndarray]:
    """Columns of a record CSV as float arrays keyed by header name."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        rows = [[float(v) for v in row] for row in r]
    arr = np.array(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
    return {name: arr[:, i] for i, name in enumerate(CSV_COLUMNS)}


def write_sweep_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([fmt(row.value), fmt(row.e_kin_final_mean), fmt(row.e_kin_final_stderr),
                        str(int(row.trajectories))])
    return path


def read_sweep_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != SWEEP_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        rows = [[float(v) for v in row] for row in r]
    arr = np.array(rows, dtype=float).reshape(-1, len(SWEEP_COLUMNS))
    return {name: arr[:, i] for i, name in enumerate(SWEEP_COLUMNS)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def final_observables(record: RunRecord) -> dict:
    frame = record.frames()[-1]
    return {name: getattr(frame, name) for name in CSV_COLUMNS}


def write_summary(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")
    return path
