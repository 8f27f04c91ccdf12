"""Command line: ``enumerate``, ``plan``, ``classify`` and ``field``.

Exit codes: 0 ok, 1 unreadable or malformed input, 2 invalid workspace
geometry, 3 no solution.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .errors import NavError, NotRealizable
from .flow import IntegrationConfig
from .geometry import ForestWorld
from .optimizer import OptimizerConfig
from .paths import PathPolyline
from .planner import EnumerationReport, PlannerConfig, Solution, enumerate_classes, filter_by_regions, plan_for_class
from .potential import WeightVector, point_potential, sigmoid
from .topology import d_signature, h_signature
from .transform import build_chain, map_path, map_points, point_world
from .workspace import Workspace, WorkspaceFormatError, load_workspace

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NO_SOLUTION = 0, 1, 2, 3
DIGITS = 9


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> float | None:
    """Round to ``DIGITS`` significant digits; non-finite values become ``None``."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{DIGITS - 1}e}")


def _fmt_csv(x: float) -> str:
    return f"{float(x):.{DIGITS}g}"


def _load(path) -> Workspace:
    try:
        ws = load_workspace(path)
    except (OSError, json.JSONDecodeError, WorkspaceFormatError) as exc:
        raise _Exit(EXIT_PARSE, f"cannot read workspace {path}: {exc}") from exc
    except NavError as exc:
        raise _Exit(EXIT_INVALID, f"invalid workspace {path}: {exc}") from exc
    try:
        ws.world.validate()
    except (NavError, ValueError) as exc:
        raise _Exit(EXIT_INVALID, f"invalid workspace {path}: {exc}") from exc
    return ws


def resolve_seed(flag: int | None, ws: Workspace) -> int:
    """Command-line flag, then ``NAV_SEED``, then the file's seed, then 0."""
    if flag is not None:
        return flag
    env = os.environ.get("NAV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise _Exit(EXIT_PARSE, f"NAV_SEED must be an integer, got {env!r}") from exc
    return 0 if ws.seed is None else ws.seed


def _config(args, seed: int) -> PlannerConfig:
    base = PlannerConfig()
    opt = replace(base.optimizer, step_size=args.step_size, margin=args.margin, fd_step=args.fd_step,
                  grad_threshold=args.grad_threshold, max_iters=args.max_iters)
    integ = replace(base.integration, goal_tol=args.goal_tol, seed=seed)
    forest_integ = replace(base.forest_integration, step=args.forest_step, goal_tol=args.goal_tol, seed=seed)
    return replace(base, optimizer=opt, integration=integ, forest_integration=forest_integ,
                   switch_sharpness=args.switch_sharpness, sphere_inflation=args.sphere_inflation,
                   flow=args.flow)


def with_root_labels(world: ForestWorld, labels) -> ForestWorld:
    """Structure whose roots are the given workspace obstacle indices, one per tree."""
    labels = list(labels)
    if len(labels) != world.n_trees:
        raise ValueError(f"expected {world.n_trees} root labels, got {len(labels)}")
    roots = []
    for tree, label in zip(world.trees, labels):
        if label not in tree.labels:
            raise ValueError(f"obstacle {label} is not in tree {list(tree.labels)}")
        roots.append(tree.labels.index(label))
    return world.with_roots(roots)


def _signature_record(sig) -> dict | None:
    if sig is None:
        return None
    return {"signs": list(sig.signs), "distances": [fmt(d) for d in sig.distances]}


def solution_record(sol: Solution, csv_name: str) -> dict:
    return {
        "candidate": sol.candidate,
        "signature": _signature_record(sol.signature),
        "forest_signature": _signature_record(sol.forest_signature),
        "weights": {"goal": fmt(sol.weights.goal_weight),
                    "obstacles": [fmt(w) for w in sol.weights.obstacle_weights]},
        "roots": list(sol.forest.root_labels),
        "fisher": fmt(sol.fisher),
        "path_csv": csv_name,
    }


def write_path_csv(path: Path, forest_path: PathPolyline, image: PathPolyline) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "y", "qx", "qy"])
        for t, p, q in zip(forest_path.times, forest_path.samples, image.samples):
            writer.writerow([_fmt_csv(t), _fmt_csv(p[0]), _fmt_csv(p[1]), _fmt_csv(q[0]), _fmt_csv(q[1])])


def read_path_csv(path) -> PathPolyline:
    """Forest-world path from the ``x,y`` columns (other columns ignored)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        samples = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise _Exit(EXIT_PARSE, f"cannot read path {path}: {exc}") from exc
    if len(samples) < 2:
        raise _Exit(EXIT_PARSE, f"path {path} needs at least two samples")
    return PathPolyline.from_samples(samples, True, "forest")


def _write_solutions(out_dir: Path, solutions, cfg: PlannerConfig, report: EnumerationReport | None,
                     failures=(), timings=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for k, sol in enumerate(solutions):
        name = f"path_{k:03d}.csv"
        chain = build_chain(sol.forest, cfg.switch_sharpness, cfg.sphere_inflation)
        write_path_csv(out_dir / name, sol.forest_path, map_path(chain, sol.forest_path))
        records.append(solution_record(sol, name))
    (out_dir / "solutions.json").write_text(json.dumps(records, indent=2) + "\n")
    rep = {
        "n_solutions": len(solutions),
        "failures": list(report.failures) if report is not None else list(failures),
        "timings": dict(report.timings) if report is not None else dict(timings or {}),
        "config": asdict(cfg),
    }
    if report is not None:
        rep.update(n_candidates=report.n_candidates, n_structures=report.n_structures,
                   path_integrations=report.path_integrations, chain_builds=report.chain_builds)
    (out_dir / "report.json").write_text(json.dumps(rep, indent=2) + "\n")


def cmd_enumerate(args) -> int:
    ws = _load(args.workspace)
    cfg = _config(args, resolve_seed(args.seed, ws))
    report = EnumerationReport()
    solutions = enumerate_classes(ws.world, cfg, report)
    _write_solutions(Path(args.out), solutions, cfg, report)
    print(f"{len(solutions)} classes from {report.n_candidates} candidates in {report.timings['enumerate']:.2f} s")
    return EXIT_OK if solutions else EXIT_NO_SOLUTION


def _parse_signs(text: str) -> tuple[int, ...]:
    try:
        signs = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise _Exit(EXIT_PARSE, f"bad signature {text!r}") from exc
    if any(s not in (-1, 1) for s in signs):
        raise _Exit(EXIT_PARSE, "signature entries must be 1 or -1")
    return signs


def cmd_plan(args) -> int:
    ws = _load(args.workspace)
    cfg = _config(args, resolve_seed(args.seed, ws))
    t0 = time.perf_counter()
    if args.signature is not None:
        signs = _parse_signs(args.signature)
        if len(signs) != ws.world.n_trees:
            raise _Exit(EXIT_PARSE, f"expected {ws.world.n_trees} signs, got {len(signs)}")
        failures = []
        try:
            solutions = [plan_for_class(ws.world, signs, cfg)]
        except NavError as exc:
            solutions = []
            failures.append({"signs": list(signs), "reason": f"{type(exc).__name__}: {exc}"})
        _write_solutions(Path(args.out), solutions, cfg, None, failures,
                         {"plan": time.perf_counter() - t0})
    else:
        report = EnumerationReport()
        solutions = filter_by_regions(enumerate_classes(ws.world, cfg, report), ws.regions)
        _write_solutions(Path(args.out), solutions, cfg, report)
    print(f"{len(solutions)} solutions")
    return EXIT_OK if solutions else EXIT_NO_SOLUTION


def _structure(ws: Workspace, roots: str | None) -> ForestWorld:
    if roots is None:
        return ws.world
    try:
        return with_root_labels(ws.world, [int(r) for r in roots.split(",")])
    except ValueError as exc:
        raise _Exit(EXIT_PARSE, f"bad --roots: {exc}") from exc


def cmd_classify(args) -> int:
    ws = _load(args.workspace)
    forest = _structure(ws, args.roots)
    path = read_path_csv(args.path)
    chain = build_chain(forest, args.switch_sharpness, args.sphere_inflation)
    pw = point_world(chain)
    try:
        image = map_path(chain, path)
        sig = d_signature(pw, image)
        hsig = h_signature(pw, image)
    except NavError as exc:
        raise _Exit(EXIT_INVALID, f"cannot classify path: {exc}") from exc
    out = {
        "roots": list(forest.root_labels),
        "signature": _signature_record(sig),
        "h_signature": [[fmt(z.real), fmt(z.imag)] for z in hsig.components],
    }
    print(json.dumps(out))
    return EXIT_OK


def field_values(forest: ForestWorld, w: WeightVector, xs, ys, switch_sharpness: float = 1.0,
                 sphere_inflation: float | None = None) -> np.ndarray:
    """Forest-world potential on the grid ``xs x ys`` (rows follow ``ys``); NaN off free space."""
    kwargs = {} if sphere_inflation is None else {"sphere_inflation": sphere_inflation}
    chain = build_chain(forest, switch_sharpness, **kwargs)
    pw = point_world(chain)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    values = np.full(len(pts), np.nan)
    free = np.flatnonzero(chain.clearance(pts) > 0.0)
    if len(free):
        images = map_points(chain, pts[free])
        for k, q in zip(free, images):
            try:
                values[k] = sigmoid(point_potential(pw, w, q))
            except NavError:
                pass
    return values.reshape(gx.shape)


def cmd_field(args) -> int:
    ws = _load(args.workspace)
    forest = _structure(ws, args.roots)
    m = forest.n_trees
    if args.weights is None:
        w = WeightVector.default(m)
    else:
        try:
            vals = [float(v) for v in args.weights.split(",")]
            w = WeightVector(vals[0], tuple(vals[1:]))
        except (ValueError, IndexError) as exc:
            raise _Exit(EXIT_PARSE, f"bad --weights: {exc}") from exc
        if len(w) != m:
            raise _Exit(EXIT_PARSE, f"expected goal weight and {m} obstacle weights")
    try:
        n = int(args.grid.lower().split("x")[0]), int(args.grid.lower().split("x")[1])
    except (ValueError, IndexError) as exc:
        raise _Exit(EXIT_PARSE, f"bad --grid {args.grid!r}, expected NxN") from exc
    b = forest.boundary
    r = b.circumradius()
    xs = np.linspace(b.center[0] - r, b.center[0] + r, n[0])
    ys = np.linspace(b.center[1] - r, b.center[1] + r, n[1])
    values = field_values(forest, w, xs, ys, args.switch_sharpness, args.sphere_inflation)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "value"])
        for j, y in enumerate(ys):
            for i, x in enumerate(xs):
                v = values[j, i]
                writer.writerow([_fmt_csv(x), _fmt_csv(y), "nan" if np.isnan(v) else _fmt_csv(v)])
    return EXIT_OK


def _add_chain_flags(p: argparse.ArgumentParser) -> None:
    base = PlannerConfig()
    p.add_argument("--switch-sharpness", type=float, default=base.switch_sharpness)
    p.add_argument("--sphere-inflation", type=float, default=base.sphere_inflation)


def _add_planner_flags(p: argparse.ArgumentParser) -> None:
    opt, integ = OptimizerConfig(), IntegrationConfig()
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides NAV_SEED and the workspace seed")
    p.add_argument("--step-size", type=float, default=opt.step_size)
    p.add_argument("--margin", type=float, default=opt.margin)
    p.add_argument("--fd-step", type=float, default=opt.fd_step)
    p.add_argument("--grad-threshold", type=float, default=opt.grad_threshold)
    p.add_argument("--max-iters", type=int, default=opt.max_iters)
    p.add_argument("--goal-tol", type=float, default=integ.goal_tol)
    p.add_argument("--forest-step", type=float, default=integ.step)
    p.add_argument("--flow", choices=("gradient", "conjugate"), default=PlannerConfig().flow)
    _add_chain_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homotopy-nav", description="Homotopy-class path planning in forest worlds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="plan one path per realizable homotopy class")
    p.add_argument("workspace")
    _add_planner_flags(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("plan", help="plan a single class, or the classes meeting the workspace regions")
    p.add_argument("workspace")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--signature", help="comma-separated signs, e.g. 1,-1,1")
    group.add_argument("--regions", action="store_true", help="filter all classes by the workspace regions")
    _add_planner_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("classify", help="D- and H-signature of a forest-world path CSV")
    p.add_argument("workspace")
    p.add_argument("path", help="CSV with x,y columns")
    p.add_argument("--roots", help="comma-separated root obstacle indices, one per tree")
    _add_chain_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("field", help="sample the forest-world potential on a grid")
    p.add_argument("workspace")
    p.add_argument("--weights", help="goal weight then obstacle weights, comma-separated")
    p.add_argument("--grid", default="100x100")
    p.add_argument("--roots", help="comma-separated root obstacle indices, one per tree")
    p.add_argument("--out", required=True, help="output CSV")
    _add_chain_flags(p)
    p.set_defaults(func=cmd_field)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    try:
        return args.func(args)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, NavError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
