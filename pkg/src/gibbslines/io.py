"""CSV and JSON persistence with byte-stable formatting."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np


def jsonable(obj):
    """Convert numpy values, dataclasses and non-finite floats to plain JSON types."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_int_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, rows, fmt="%d", delimiter=",")


def write_paths_csv(path, paths, t0: int) -> Path:
    """Rows ``path_id,t,value`` for an ``(P, n+1)`` integer array."""
    paths = np.atleast_2d(np.asarray(paths, dtype=np.int64))
    P, m = paths.shape
    pid, tt = np.meshgrid(np.arange(P), np.arange(t0, t0 + m), indexing="ij")
    _write_int_rows(path, "path_id,t,value", np.column_stack([pid.ravel(), tt.ravel(), paths.ravel()]))
    return Path(path)


def write_ensembles_csv(path, samples, t0: int) -> Path:
    """Rows ``sample_id,curve,t,value`` for an ``(S, k, n+1)`` integer array."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.ndim == 2:
        samples = samples[None]
    S, k, m = samples.shape
    sid, cid, tt = np.meshgrid(np.arange(S), np.arange(k), np.arange(t0, t0 + m), indexing="ij")
    _write_int_rows(path, "sample_id,curve,t,value",
                    np.column_stack([sid.ravel(), cid.ravel(), tt.ravel(), samples.ravel()]))
    return Path(path)


def write_continuous_csv(path, grid, values, header: dict | None = None) -> Path:
    """Rows ``curve,t,value`` preceded by one ``# {json}`` header line."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    grid = np.asarray(grid, dtype=float)
    k, m = values.shape
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(jsonable(header or {}), sort_keys=True) + "\n")
        fh.write("curve,t,value\n")
        for i in range(k):
            for t, v in zip(grid, values[i]):
                fh.write(f"{i},{t!r},{v!r}\n")
    return Path(path)


def write_table_csv(path, rows, columns=None) -> Path:
    """Write a list of dicts (or objects with ``to_dict``) as CSV."""
    rows = [jsonable(r) for r in rows]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return Path(path)
