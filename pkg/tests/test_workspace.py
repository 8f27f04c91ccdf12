import json
from pathlib import Path

import pytest

from homotopy_nav.errors import CyclicAdjacency
from homotopy_nav.geometry import enumerate_forests
from homotopy_nav.workspace import (WorkspaceFormatError, load_workspace, parse_workspace, save_workspace,
                                    workspace_record)
from homotopy_nav.worlds import desk_world, disc, gate_world, polygon_world, room

ROOT = Path(__file__).resolve().parents[1]


def record(**changes):
    w = gate_world()
    rec = workspace_record(w.boundary, [n for t in w.trees for n in t.nodes], w.start, w.goal)
    rec.update(changes)
    return rec


def test_round_trip(tmp_path):
    w = desk_world()
    obstacles = [n for t in w.trees for n in t.nodes]
    save_workspace(tmp_path / "w.json", w.boundary, obstacles, w.start, w.goal, seed=7)
    ws = load_workspace(tmp_path / "w.json")
    assert ws.world.trees == w.trees and ws.world.boundary == w.boundary
    assert ws.seed == 7 and ws.obstacles == obstacles and ws.regions == []


@pytest.mark.parametrize("name, world, n_structures", [
    ("desk", desk_world(), 1), ("gate", gate_world(), 1), ("polygon", polygon_world(), 54)])
def test_shipped_workspaces(name, world, n_structures):
    ws = load_workspace(ROOT / "workspaces" / f"{name}.json")
    ws.world.validate()
    assert ws.world.trees == world.trees
    assert len(enumerate_forests(ws.world)) == n_structures


def test_optional_fields():
    ws = parse_workspace(record(regions=[dict(workspace_record(room(), [], (0, 0), (1, 1))["boundary"],
                                             kind="bonus")]))
    assert ws.regions[0].kind == "bonus"
    rec = record()
    del rec["obstacles"][0]["theta"], rec["obstacles"][0]["kappa"]
    assert parse_workspace(rec).obstacles[0].kappa == 0.5


@pytest.mark.parametrize("bad", [
    [],
    record(schema_version=2),
    record(extra=1),
    record(start=[1.0]),
    record(goal=[1.0, "x"]),
    record(goal=[1.0, float("nan")]),
    record(seed=1.5),
    record(seed=True),
    record(obstacles={}),
    record(obstacles=[{"center": [1, 1], "width": 1}]),
    record(obstacles=[{"center": [1, 1], "width": 1, "height": 1, "colour": "red"}]),
    record(obstacles=[{"center": [1, 1], "width": -1, "height": 1}]),
    record(regions=[{"center": [1, 1], "width": 1, "height": 1, "kind": "maybe"}]),
])
def test_malformed_records(bad):
    with pytest.raises(WorkspaceFormatError):
        parse_workspace(bad)


def test_missing_top_level_field():
    rec = record()
    del rec["goal"]
    with pytest.raises(WorkspaceFormatError):
        parse_workspace(rec)


def test_geometry_errors_are_not_format_errors():
    ring = [disc((0, 0), 2.0, 1e-6), disc((1.5, 0), 2.0, 1e-6), disc((0.75, 1.2), 2.0, 1e-6)]
    rec = workspace_record(room(20.0, (0.0, 0.0)), ring, (-8, -8), (8, 8))
    with pytest.raises(CyclicAdjacency):
        parse_workspace(rec)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(json.JSONDecodeError):
        load_workspace(p)
