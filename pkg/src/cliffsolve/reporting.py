"""JSON reports with fixed 17-significant-digit floats, and CSV field dumps."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from cliffsolve.hyperbolic_solver import FieldGrid, Grid


def _plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and tuples to JSON-able values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _format(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_format(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _format(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _format(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: insertion-ordered keys, floats as ``%.17g``, NaN/inf as null."""
    return _format(_plain(obj), indent, 0) + "\n"


def write_report(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))


def write_field_csv(path: Path, slice_: FieldGrid, grid: Grid) -> None:
    """Columns: step, one coordinate per active axis, component, re, im."""
    path.parent.mkdir(parents=True, exist_ok=True)
    values = slice_.values.reshape(grid.npoints, -1)
    coords = [c.ravel() for c in grid.coordinates()]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"x{a}" for a in grid.active_axes] + ["component", "re", "im"])
        for p in range(grid.npoints):
            xs = [format(c[p], ".17g") for c in coords]
            for comp, val in enumerate(values[p]):
                writer.writerow([slice_.step] + xs + [comp, format(val.real, ".17g"), format(val.imag, ".17g")])


def write_energy_csv(path: Path, rows: list[tuple[int, float, float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    e0 = rows[0][2] if rows else 0.0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "energy", "relative_drift"])
        for step, time, e in rows:
            drift = abs(e - e0) / e0 if e0 > 0 else abs(e)
            writer.writerow([step, format(time, ".17g"), format(e, ".17g"), format(drift, ".17g")])
