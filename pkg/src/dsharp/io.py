"""Reading data columns and writing JSON reports and CSV curves."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError

SCHEMA_VERSION = "1"


def read_data(path) -> np.ndarray:
    """One numeric column, optionally headed ``x``. Errors cite line numbers."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    values = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 1:
                raise InputError(f"{path}: line {lineno}: expected a single column")
            cell = row[0].strip()
            if lineno == 1 and cell.lower() == "x":
                continue
            try:
                val = float(cell)
            except ValueError:
                raise InputError(f"{path}: line {lineno}: not a number: {cell!r}") from None
            if not math.isfinite(val):
                raise InputError(f"{path}: line {lineno}: non-finite value")
            values.append(val)
    if not values:
        raise InputError(f"{path}: no data rows")
    return np.array(values)


def write_data(path, values) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x\n")
        for v in np.asarray(values, dtype=float).tolist():
            fh.write(f"{v!r}\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"


def write_json(path, report: dict) -> None:
    Path(path).write_text(dumps(report))


def write_csv(path, columns: dict) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    rows = len(cols[0])
    if any(len(c) != rows for c in cols):
        raise ValueError("curve columns must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(rows):
            writer.writerow([repr(float(c[i])) for c in cols])


def read_csv_columns(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(c) for c in row] for row in reader if row]
    arr = np.array(data)
    return {name: arr[:, i] for i, name in enumerate(header)}
