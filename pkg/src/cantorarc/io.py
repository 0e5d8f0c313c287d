"""Input loading (CSV point lists, IFS JSON) and artifact JSON helpers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from cantorarc.errors import SchemaError
from cantorarc.geometry import PointSet

SCHEMA_VERSION = 1


def load_points(path) -> PointSet:
    """Load a point set from a `x,y` CSV or an IFS JSON description."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    if path.suffix.lower() == ".json":
        return load_ifs(path)
    raise SchemaError(f"unsupported input extension: {path.suffix}")


def load_csv(path) -> PointSet:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["x", "y"]:
            raise SchemaError("CSV must have header 'x,y'")
        pts = [(float(row["x"]), float(row["y"])) for row in reader]
    if not pts:
        raise SchemaError("empty CSV point list")
    return PointSet(np.asarray(pts, dtype=float))


def load_ifs(path) -> PointSet:
    with open(path) as fh:
        spec = json.load(fh)
    try:
        maps = spec["maps"]
        depth = int(spec["depth"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"IFS JSON missing field: {exc}") from exc
    if depth < 1:
        raise SchemaError("IFS depth must be >= 1")
    parsed = []
    for m in maps:
        s, r = float(m["scale"]), float(m.get("rot", 0.0))
        if not 0.0 < s < 1.0:
            raise SchemaError("IFS scale must lie in (0, 1)")
        parsed.append((s, r, float(m["tx"]), float(m["ty"])))
    return expand_ifs(parsed, depth)


def expand_ifs(maps, depth: int) -> PointSet:
    """Expand an IFS to depth-k sample points with exact word addresses.

    Each map is (scale, rot, tx, ty) acting as x ↦ scale·R(rot)x + (tx,ty).
    The base point is the centroid of the maps' fixed points; depth k
    applies every length-k map composition to it, giving (#maps)^depth
    points labeled by their words (outermost map first).  Anchoring at the
    centroid keeps each depth-k cell's sample well inside the cell, so the
    separation hierarchy of the attractor survives truncation (fixed-point
    anchoring would put samples on cell corners and collapse the two finest
    generations into a uniform grid).
    """
    mats = []
    fixes = []
    for s, r, tx, ty in maps:
        c, sn = math.cos(r), math.sin(r)
        A = s * np.array([[c, -sn], [sn, c]])
        b = np.array([tx, ty])
        mats.append((A, b))
        fixes.append(np.linalg.solve(np.eye(2) - A, b))
    pts = np.asarray(fixes).mean(axis=0, keepdims=True)
    labels = [()]
    for _ in range(depth):
        new_pts = [pts @ A.T + b for A, b in mats]
        labels = [(i + 1,) + lab for i in range(len(mats)) for lab in labels]
        pts = np.vstack(new_pts)
    return PointSet(pts, tuple(labels))


def write_json(path, payload: dict):
    """Write a deterministic, diffable artifact JSON."""
    payload = dict(payload)
    payload.setdefault("schema_version", SCHEMA_VERSION)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
