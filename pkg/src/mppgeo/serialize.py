"""Canonical JSON / CSV output for trajectories and sample sets.

Floats are written with Python's shortest round-trip decimal representation
(at most 17 significant digits), so every file re-parses to bit-identical
values and identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TRAJ_SCHEMA = "mppgeo.trajectory.v1"
SAMPLES_SCHEMA = "mppgeo.samples.v1"
CHECK_SCHEMA = "mppgeo.singular_check.v1"


def _plain(obj):
    """Recursively convert numpy scalars/arrays for the json encoder."""
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()] if obj.ndim else obj.item()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def canonical_dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=1, allow_nan=False) + "\n"


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_dumps(obj))
    return path


def read_json(path: str | Path):
    return json.loads(Path(path).read_text())


def write_csv(path: str | Path, columns: dict[str, np.ndarray]) -> Path:
    """Flat numeric columns; all arrays must share the leading length."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float).reshape(len(columns[k]), -1)
              for k in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("csv columns must share the same length")
    headers = []
    for name, arr in zip(names, arrays):
        if arr.shape[1] == 1:
            headers.append(name)
        else:
            headers.extend(f"{name}{i}" for i in range(arr.shape[1]))
    lines = [",".join(headers)]
    data = np.concatenate(arrays, axis=1)
    for row in data:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
