"""Point, label and result files.

Points are CSV, one row per point, with an optional final integer label
column and '#' comment lines. Multi-dataset files put the dataset id in the
first column. Results are JSON documents.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .synth import LabeledDataset

FLOAT_FMT = "%.17g"


def _rows(path):
    """Yield ``(line_number, fields)`` for every non-comment, non-blank line."""
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, [f.strip() for f in line.split(",")]


def _parse_table(path) -> np.ndarray:
    rows, width = [], None
    for lineno, fields in _rows(path):
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric field in {','.join(fields)!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.array(rows)
    if not np.all(np.isfinite(table)):
        bad = int(np.flatnonzero(~np.isfinite(table).all(axis=1))[0])
        raise ValueError(f"{path}: non-finite value in data row {bad + 1}")
    return table


def _as_int_column(col, path, what):
    if np.any(col != np.round(col)):
        raise ValueError(f"{path}: {what} column must hold integers")
    return col.astype(np.int64)


def read_points(path, labels: bool = False) -> LabeledDataset:
    """Read a point CSV; with ``labels`` the last column is taken as ground truth."""
    table = _parse_table(path)
    if not labels:
        return LabeledDataset(table, None)
    if table.shape[1] < 2:
        raise ValueError(f"{path}: need at least one feature column besides the labels")
    return LabeledDataset(table[:, :-1].copy(), _as_int_column(table[:, -1], path, "label"))


def write_points(path, points, labels=None) -> None:
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if labels is None:
        np.savetxt(path, X, fmt=FLOAT_FMT, delimiter=",")
        return
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w") as fh:
        for row, lab in zip(X, labels):
            fh.write(",".join(FLOAT_FMT % v for v in row) + f",{lab}\n")


def read_datasets(path, labels: bool = False):
    """Read ``dataset_id, x1, ..., xd[, label]`` rows into per-dataset arrays.

    Datasets are returned in order of first appearance. Returns
    ``(datasets, label_lists)`` with ``label_lists`` None unless ``labels``.
    """
    table = _parse_table(path)
    if table.shape[1] < (3 if labels else 2):
        raise ValueError(f"{path}: too few columns for a multi-dataset file")
    ids = _as_int_column(table[:, 0], path, "dataset id")
    _, first = np.unique(ids, return_index=True)
    datasets, label_lists = [], []
    for j in ids[np.sort(first)]:
        rows = table[ids == j]
        if labels:
            datasets.append(rows[:, 1:-1].copy())
            label_lists.append(_as_int_column(rows[:, -1], path, "label"))
        else:
            datasets.append(rows[:, 1:].copy())
    return datasets, (label_lists if labels else None)


def write_datasets(path, datasets, labels=None) -> None:
    with open(path, "w") as fh:
        for j, X in enumerate(datasets):
            X = np.atleast_2d(np.asarray(X, dtype=np.float64))
            for i, row in enumerate(X):
                line = f"{j}," + ",".join(FLOAT_FMT % v for v in row)
                if labels is not None:
                    line += f",{int(labels[j][i])}"
                fh.write(line + "\n")


def read_labels(path) -> np.ndarray:
    """Labels from a JSON result (its ``assignments``), a JSON list, or text.

    Text files hold one label per line or comma-separated values; with
    several columns the last one is used.
    """
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith(("{", "[")):
        doc = json.loads(text)
        if isinstance(doc, dict):
            if "assignments" not in doc:
                raise ValueError(f"{path}: JSON document has no 'assignments'")
            doc = doc["assignments"]
        if doc and isinstance(doc[0], list):  # one list per dataset
            doc = [a for part in doc for a in part]
        return np.asarray(doc, dtype=np.int64)
    table = _parse_table(path)
    column = table[0] if table.shape[0] == 1 else table[:, -1]
    return _as_int_column(column, path, "label")


def write_labels(path, labels) -> None:
    np.savetxt(path, np.asarray(labels, dtype=np.int64), fmt="%d")


def iris() -> LabeledDataset:
    """The bundled Fisher iris data: 150 points, 4 features, labels 0..2."""
    with resources.as_file(resources.files("npclust") / "data" / "iris.csv") as p:
        return read_points(p, labels=True)


def iris_path() -> Path:
    return Path(str(resources.files("npclust") / "data" / "iris.csv"))


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_result(path, result: dict) -> None:
    """Write a result document; floats keep full precision (repr round-trips)."""
    Path(path).write_text(json.dumps(to_jsonable(result), indent=2) + "\n")


def read_result(path) -> dict:
    return json.loads(Path(path).read_text())
