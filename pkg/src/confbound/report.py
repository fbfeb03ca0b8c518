"""Deterministic JSON and CSV serialisation of report records."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np


def normalize(obj: Any) -> Any:
    """Plain Python tree: numpy scalars/arrays to floats/lists, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return normalize(obj.as_dict())
    return str(obj)


def format_float(x: float) -> str:
    """Fixed 17 significant digits (exact round trip); non-finite values become JSON strings."""
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(obj, ensure_ascii=False)


def to_json(record: Any, indent: int = 2) -> str:
    """Sorted keys and fixed float formatting, so identical inputs give identical bytes."""
    return _dump(normalize(record), indent, 0) + "\n"


def flatten(record: Any, prefix: str = "") -> list[tuple[str, Any]]:
    """Dotted-key rows; list entries are indexed (``a.0``, ``a.1``)."""
    obj = normalize(record) if not prefix else record
    rows: list[tuple[str, Any]] = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            rows += flatten(obj[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows += flatten(v, f"{prefix}.{i}")
    else:
        rows.append((prefix, obj))
    return rows


def _csv_value(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return format_float(v).strip('"')
    return str(v)


def to_csv(record: Any) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for k, v in flatten(record):
        writer.writerow([k, _csv_value(v)])
    return buf.getvalue()


def render(record: Any, fmt: str) -> str:
    if fmt == "json":
        return to_json(record)
    if fmt == "csv":
        return to_csv(record)
    raise ValueError(f"unknown output format '{fmt}'")
