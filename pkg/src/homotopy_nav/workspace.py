"""Workspace JSON files (schema version 1)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import ForestWorld, Squircle, build_trees
from .planner import RegionPreference

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "boundary", "obstacles", "start", "goal", "regions", "seed"}
_SQUIRCLE_KEYS = {"center", "width", "height", "theta", "kappa"}


class WorkspaceFormatError(ValueError):
    """The file is not a well-formed schema-1 workspace."""


@dataclass
class Workspace:
    world: ForestWorld
    obstacles: list[Squircle]
    regions: list[RegionPreference] = field(default_factory=list)
    seed: int | None = None


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise WorkspaceFormatError(f"{where}: expected a finite number")
    return float(value)


def _point(value, where: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise WorkspaceFormatError(f"{where}: expected [x, y]")
    return (_number(value[0], where), _number(value[1], where))


def _squircle(rec, where: str, extra: set[str] = frozenset()) -> Squircle:
    if not isinstance(rec, dict):
        raise WorkspaceFormatError(f"{where}: expected an object")
    unknown = set(rec) - _SQUIRCLE_KEYS - extra
    if unknown:
        raise WorkspaceFormatError(f"{where}: unknown fields {sorted(unknown)}")
    missing = {"center", "width", "height"} - set(rec)
    if missing:
        raise WorkspaceFormatError(f"{where}: missing fields {sorted(missing)}")
    try:
        return Squircle(_point(rec["center"], where), _number(rec["width"], where),
                        _number(rec["height"], where), _number(rec.get("theta", 0.0), where),
                        _number(rec.get("kappa", 0.5), where))
    except ValueError as exc:
        raise WorkspaceFormatError(f"{where}: {exc}") from exc


def parse_workspace(data) -> Workspace:
    """Check the schema and build the forest world (geometry is validated separately)."""
    if not isinstance(data, dict):
        raise WorkspaceFormatError("workspace must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise WorkspaceFormatError(f"unknown fields {sorted(unknown)}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise WorkspaceFormatError(f"schema_version must be {SCHEMA_VERSION}")
    for key in ("boundary", "obstacles", "start", "goal"):
        if key not in data:
            raise WorkspaceFormatError(f"missing field {key!r}")
    if not isinstance(data["obstacles"], list):
        raise WorkspaceFormatError("obstacles must be a list")
    boundary = _squircle(data["boundary"], "boundary")
    obstacles = [_squircle(o, f"obstacles[{i}]") for i, o in enumerate(data["obstacles"])]
    regions = []
    for i, rec in enumerate(data.get("regions", [])):
        sq = _squircle(rec, f"regions[{i}]", {"kind"})
        if rec.get("kind") not in ("restricted", "bonus"):
            raise WorkspaceFormatError(f"regions[{i}]: kind must be 'restricted' or 'bonus'")
        regions.append(RegionPreference(sq, rec["kind"]))
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise WorkspaceFormatError("seed must be an integer")
    start, goal = _point(data["start"], "start"), _point(data["goal"], "goal")
    # overlap cycles raise CyclicAdjacency: a geometry problem, not a format one
    world = ForestWorld(boundary, tuple(build_trees(obstacles)), start, goal)
    return Workspace(world, obstacles, regions, seed)


def load_workspace(path) -> Workspace:
    """Read and parse a workspace file; ``json.JSONDecodeError`` and ``WorkspaceFormatError`` signal bad input."""
    with open(path) as fh:
        data = json.load(fh)
    return parse_workspace(data)


def squircle_record(s: Squircle) -> dict:
    return {"center": list(s.center), "width": s.width, "height": s.height, "theta": s.orientation, "kappa": s.kappa}


def workspace_record(boundary: Squircle, obstacles, start, goal, regions=(), seed=None) -> dict:
    rec = {"schema_version": SCHEMA_VERSION, "boundary": squircle_record(boundary),
           "obstacles": [squircle_record(o) for o in obstacles], "start": list(start), "goal": list(goal)}
    if regions:
        rec["regions"] = [dict(squircle_record(r.region), kind=r.kind) for r in regions]
    if seed is not None:
        rec["seed"] = seed
    return rec


def save_workspace(path, boundary: Squircle, obstacles, start, goal, regions=(), seed=None) -> None:
    Path(path).write_text(json.dumps(workspace_record(boundary, obstacles, start, goal, regions, seed), indent=2) + "\n")
