"""File formats: point/path text files, scene JSON, trajectory CSV, stable JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FlightDiffError, InputError
from .geometry import (
    DEFAULT_SURFACE_DENSITY,
    GuidePath,
    ObstacleScene,
    build_scene,
    discretize_box,
    discretize_cylinder,
    discretize_sphere,
)
from .trajmetrics import TrajectoryLog

LOG_COLUMNS = ("t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az", "jx", "jy", "jz")
LOG_WIDTHS = (4, 7, 10, 13)


def fmt(x: float) -> str:
    return format(float(x), ".9g")


def dumps(obj, indent: int = 2) -> str:
    """JSON with insertion-ordered keys and floats at 9 significant digits.

    Non-finite floats are written as null.
    """
    return _encode(obj, indent, 0) + "\n"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def read_text(path) -> str:
    p = Path(path)
    try:
        return p.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {p}", path=str(p)) from exc
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}", path=str(p)) from exc


def parse_points(text: str, source: str = "<points>") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise InputError(f"{source}:{lineno}: expected 'x y z', got {len(parts)} fields", line=lineno)
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}", line=lineno) from exc
    return np.array(rows, dtype=float).reshape(-1, 3)


def format_points(points) -> str:
    return "".join(f"{fmt(x)} {fmt(y)} {fmt(z)}\n" for x, y, z in np.asarray(points, dtype=float))


def write_points(path, points) -> None:
    Path(path).write_text(format_points(points), encoding="utf-8")


def scene_from_primitives(spec: dict) -> np.ndarray:
    density = float(spec.get("surface_density", DEFAULT_SURFACE_DENSITY))
    parts = []
    for k, prim in enumerate(spec.get("primitives", [])):
        kind = prim.get("type")
        try:
            if kind == "sphere":
                parts.append(discretize_sphere(prim["center"], float(prim["radius"]), density))
            elif kind == "cylinder":
                parts.append(
                    discretize_cylinder(
                        prim["base"], float(prim["radius"]), float(prim["height"]), density, prim.get("caps", True)
                    )
                )
            elif kind == "box":
                parts.append(discretize_box(prim["min"], prim["max"], density))
            else:
                raise InputError(f"primitive {k}: unknown type {kind!r}", primitive=k)
        except KeyError as exc:
            raise InputError(f"primitive {k}: missing field {exc.args[0]!r}", primitive=k) from exc
    for p in spec.get("points", []):
        parts.append(np.asarray(p, dtype=float).reshape(1, 3))
    return np.concatenate(parts) if parts else np.empty((0, 3))


def read_scene(path) -> Optional[ObstacleScene]:
    """Load a point file or a JSON primitive scene; an empty file means free space."""
    text = read_text(path)
    if str(path).endswith(".json"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        points = scene_from_primitives(spec)
    else:
        points = parse_points(text, str(path))
    if len(points) == 0:
        return None
    try:
        return build_scene(points)
    except FlightDiffError as exc:
        raise InputError(f"{path}: {exc}") from exc


def read_path(path) -> GuidePath:
    points = parse_points(read_text(path), str(path))
    try:
        return GuidePath(points)
    except FlightDiffError as exc:
        raise InputError(f"{path}: {exc}") from exc


def parse_log(text: str, source: str = "<log>", timing: Optional[dict] = None) -> TrajectoryLog:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError(f"{source}: empty log file") from None
    expected = "t,x,y,z[,vx,vy,vz[,ax,ay,az[,jx,jy,jz]]]"
    for k, got in enumerate(header):
        want = LOG_COLUMNS[k] if k < len(LOG_COLUMNS) else None
        if got != want:
            raise InputError(f"{source}: unexpected column {got!r}; header must be {expected}", column=got)
    if len(header) not in LOG_WIDTHS:
        raise InputError(
            f"{source}: incomplete column group ending at {header[-1]!r}; header must be {expected}",
            column=header[-1],
        )
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise InputError(f"{source}:{lineno}: expected {len(header)} fields, got {len(rec)}", line=lineno)
        try:
            rows.append([float(c) for c in rec])
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}", line=lineno) from exc
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    kw = {}
    for name, col in (("v", 4), ("a", 7), ("j", 10)):
        if data.shape[1] >= col + 3:
            kw[name] = data[:, col : col + 3]
    try:
        return TrajectoryLog(data[:, 0], data[:, 1:4], timing=timing, **kw)
    except FlightDiffError as exc:
        raise InputError(f"{source}: {exc}") from exc


def timing_sidecar(log_path) -> Path:
    p = Path(log_path)
    return p.with_name(p.stem + ".timing.json")


def read_log(path, timing_path=None) -> TrajectoryLog:
    """Trajectory CSV plus optional ``<stem>.timing.json`` stage times in ms."""
    timing = None
    side = Path(timing_path) if timing_path else timing_sidecar(path)
    if side.exists():
        try:
            timing = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{side}: invalid JSON: {exc}") from exc
        if not isinstance(timing, dict) or not all(isinstance(v, (int, float)) for v in timing.values()):
            raise InputError(f"{side}: timing must map stage names to milliseconds")
    elif timing_path:
        raise InputError(f"file not found: {side}")
    return parse_log(read_text(path), str(path), timing)


def format_log(log: TrajectoryLog) -> str:
    cols = [log.t[:, None], log.x]
    header = list(LOG_COLUMNS[:4])
    for name, labels in (("v", LOG_COLUMNS[4:7]), ("a", LOG_COLUMNS[7:10]), ("j", LOG_COLUMNS[10:13])):
        val = getattr(log, name)
        if val is None:
            break
        cols.append(val)
        header.extend(labels)
    data = np.hstack(cols)
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in data]
    return "\n".join(lines) + "\n"
