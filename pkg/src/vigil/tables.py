"""Window-indexed CSV tables (features, predictions) with a provenance line.

The first line of every table written here is
``# vigil <version> config_hash=<hash>``; readers skip ``#`` lines.
"""
from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from ._version import __version__
from .errors import DataError

TIME_COLUMN = "window_start_s"


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def stamp_line(config_hash: str) -> str:
    return f"# vigil {__version__} config_hash={config_hash}\n"


def uncommented(fh):
    return (line for line in fh if not line.startswith("#"))


def read_stamp(path) -> dict:
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("# vigil "):
        return {}
    parts = first[2:].split()
    out = {"version": parts[1]}
    out.update(p.split("=", 1) for p in parts[2:] if "=" in p)
    return out


def write_matrix(path, starts, names, X, config_hash: str = "") -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        fh.write(stamp_line(config_hash))
        w = csv.writer(fh)
        w.writerow([TIME_COLUMN, *names])
        for t, row in zip(starts, X):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def read_matrix(path):
    """``(starts, names, X)`` from a table written by :func:`write_matrix`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(uncommented(fh)))
    if not rows or rows[0][0] != TIME_COLUMN:
        raise DataError(f"{path}: expected a '{TIME_COLUMN}' first column")
    names = rows[0][1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell ({exc})") from exc
    data = data.reshape(-1, len(names) + 1)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: NaN or Inf in table")
    return data[:, 0], names, data[:, 1:]
