"""CSV and JSON formats, written atomically."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .completion import ObservationMask, PartialMatrix


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return "%.17g" % x


def format_matrix(M) -> str:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in M)


def write_matrix_csv(path, M) -> None:
    atomic_write_text(path, format_matrix(M))


def _lines(path):
    try:
        with open(path, "r", newline="") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except IsADirectoryError:
        raise InputError(f"{path}: is a directory") from None
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip():
            yield lineno, line


def read_matrix_csv(path) -> np.ndarray:
    rows, width = [], None
    for lineno, line in _lines(path):
        fields = line.split(",")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in row):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_labels_csv(path, labels) -> None:
    atomic_write_text(path, "".join(f"{int(v)}\n" for v in np.asarray(labels).ravel()))


def read_labels_csv(path, expected: int | None = None) -> np.ndarray:
    out = []
    for lineno, line in _lines(path):
        try:
            v = int(line.strip())
        except ValueError:
            raise InputError(f"{path}:{lineno}: expected an integer label, got {line!r}") from None
        if v < 0:
            raise InputError(f"{path}:{lineno}: labels must be non-negative")
        out.append(v)
    if not out:
        raise InputError(f"{path}: no labels")
    if expected is not None and len(out) != expected:
        raise InputError(f"{path}: {len(out)} labels for {expected} data rows")
    return np.array(out, dtype=np.int64)


def write_mask_csv(path, observed: PartialMatrix) -> None:
    ent = observed.mask.entries
    atomic_write_text(path, "".join(f"{r},{c},{_fmt(v)}\n"
                                    for (r, c), v in zip(ent, observed.values)))


def read_mask_csv(path, shape=None) -> PartialMatrix:
    """Read ``row,col,value`` triples; the shape defaults to the largest indices plus one."""
    rows, cols, vals, seen = [], [], [], {}
    for lineno, line in _lines(path):
        fields = line.split(",")
        if len(fields) != 3:
            raise InputError(f"{path}:{lineno}: expected row,col,value, got {line!r}")
        try:
            r, c, v = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise InputError(f"{path}:{lineno}: malformed triple {line!r}") from None
        if r < 0 or c < 0:
            raise InputError(f"{path}:{lineno}: negative index")
        if not math.isfinite(v):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if (r, c) in seen:
            raise InputError(f"{path}:{lineno}: entry ({r},{c}) repeats line {seen[(r, c)]}")
        seen[(r, c)] = lineno
        rows.append(r)
        cols.append(c)
        vals.append(v)
    if not rows:
        raise InputError(f"{path}: no observed entries")
    if shape is None:
        shape = (max(rows) + 1, max(cols) + 1)
    elif max(rows) >= shape[0] or max(cols) >= shape[1]:
        raise InputError(f"{path}: index outside shape {tuple(shape)}")
    mask = ObservationMask.from_entries(shape, rows, cols)
    dense = np.zeros(shape)
    dense[rows, cols] = vals
    return PartialMatrix.from_dense(dense, mask)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as strings."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps(obj))


def report_document(manifest: dict, reports=(), embedding_summary=None, rho=None) -> dict:
    """The report layout: manifest, bound reports, embedding summary, misclassification rate."""
    return {"manifest": manifest,
            "reports": [r.to_dict() if hasattr(r, "to_dict") else r for r in reports],
            "embedding_summary": embedding_summary,
            "rho": rho}
