"""CSV and JSON reading and writing with located error messages."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .data import DataViews
from .errors import InputError, StorageError

__all__ = ["read_matrix_csv", "write_matrix_csv", "read_views", "write_json", "read_json", "to_jsonable"]


def _fmt(x: float) -> str:
    # shortest round-tripping representation, stable across runs
    return repr(float(x))


def read_matrix_csv(path) -> tuple[np.ndarray, list[str]]:
    """Parse a header-plus-numeric-rows CSV into ``(matrix, column_names)``."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise StorageError(f"{path}: file not found") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise StorageError(f"{path}: cannot read ({exc})") from exc
    if not rows:
        raise InputError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if not header or any(h == "" for h in header):
        raise InputError(f"{path}: header row has an empty column name")
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    body = rows[1:]
    # tolerate a trailing blank line
    while body and not any(cell.strip() for cell in body[-1]):
        body.pop()
    if not body:
        raise InputError(f"{path}: no data rows")
    out = np.empty((len(body), len(header)))
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        for c, cell in enumerate(row):
            try:
                val = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {r}, column {c + 1} ({header[c]!r}): non-numeric value {cell!r}"
                ) from None
            if not math.isfinite(val):
                raise InputError(f"{path}: row {r}, column {c + 1} ({header[c]!r}): non-finite value {cell!r}")
            out[r - 2, c] = val
    return out, header


def write_matrix_csv(path, matrix: np.ndarray, names: list[str]) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != len(names):
        raise InputError("column names do not match the matrix width")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in matrix:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise StorageError(f"{path}: cannot write ({exc})") from exc


def read_views(path1, path2) -> DataViews:
    x1, names1 = read_matrix_csv(path1)
    x2, names2 = read_matrix_csv(path2)
    if x1.shape[0] != x2.shape[0]:
        raise InputError(f"{path1} has {x1.shape[0]} rows but {path2} has {x2.shape[0]}")
    return DataViews(x1, x2, names1, names2)


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), (str, int)):
        return obj.value
    return obj


def write_json(path, obj: Any) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"{path}: cannot write ({exc})") from exc


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise StorageError(f"{path}: file not found") from exc
    except OSError as exc:
        raise StorageError(f"{path}: cannot read ({exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
