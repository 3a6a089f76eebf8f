"""CSV and manifest writers.

Every CSV starts with ``#`` metadata lines (schema id, then one JSON line per
metadata key) followed by a header row. Floats are written with ``repr`` so
files are bit-exact functions of the computed values.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1


def schema_id(name: str) -> str:
    return f"srlaser.{name}/v{SCHEMA_VERSION}"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)


def write_csv(path: str | Path, name: str, columns: Sequence[str], rows: Iterable[Sequence],
              meta: Mapping | None = None) -> Path:
    """Write a schema-tagged CSV; ``meta`` entries become ``# key: json`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {schema_id(name)}\n")
        for key in sorted(meta or {}):
            fh.write(f"# {key}: {dumps(meta[key])}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_columns(path, name, data: Mapping[str, Sequence], meta=None) -> Path:
    cols = list(data)
    return write_csv(path, name, cols, zip(*(data[c] for c in cols)), meta)


def read_csv(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a file written by :func:`write_csv`; returns (metadata, columns)."""
    meta: dict = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            value = value.strip()
            try:
                meta[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                meta[key.strip()] = value
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals, dtype=object)
    return meta, cols


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
