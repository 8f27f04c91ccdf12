"""Acceptance criteria 1-10. Each test prints one ``CRITERION k: PASS|FAIL`` line."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from homotopy_nav import flow, transform
from homotopy_nav.cli import main
from homotopy_nav.flow import IntegrationConfig, integrate_forest_path, integrate_point_path
from homotopy_nav.geometry import enumerate_forests
from homotopy_nav.optimizer import OptimizerConfig, optimize_weights, project_weights
from homotopy_nav.oracle import random_feasible_weights, reachable_classes
from homotopy_nav.planner import EnumerationReport, PlannerConfig, enumerate_classes
from homotopy_nav.potential import (WeightVector, forest_gradient, forest_potential, halfspace_slack,
                                    point_gradient, point_potential)
from homotopy_nav.topology import (candidate_signatures, h_difference, h_signature_markers, homologous,
                                   path_distances, sign_vector)
from homotopy_nav.transform import PointWorld, build_chain, map_path, point_world
from homotopy_nav.workspace import load_workspace
from homotopy_nav.worlds import disc_world, gate_world, polygon_world, random_point_world, three_tree_world

ROOT = Path(__file__).resolve().parents[1]
ADAPTIVE = IntegrationConfig(adaptive=True)


@pytest.fixture
def verdict(capsys):
    def emit(k: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return emit


def converged_paths(world, rng, n, cfg=ADAPTIVE):
    paths = []
    while len(paths) < n:
        # a small goal excess keeps the obstacles' pull strong, so classes vary
        w = random_feasible_weights(rng, world.n_obstacles, max_goal_excess=1.0)
        path = integrate_point_path(world, w, world.start, cfg)
        if path.converged:
            paths.append(path)
    return paths


def test_criterion_1_sign_vectors_match_h_signatures(verdict):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    agree = different = 0
    for k in range(200):
        world = random_point_world(rng, 1 + k % 6)
        pool = converged_paths(world, rng, 8)
        a, b = pool[0], pool[1]
        if k % 2:  # prefer a pair in different classes when the pool has one
            b = next((p for p in pool[1:] if sign_vector(world, p) != sign_vector(world, a)), b)
        same_sign = sign_vector(world, a) == sign_vector(world, b)
        different += not same_sign
        agree += same_sign == (h_difference(world, a, b) < 1e-6)
    elapsed = time.perf_counter() - t0
    ok = agree == 200 and elapsed < 30.0
    assert verdict(1, ok, f"{agree}/200 agree ({different} pairs in different classes), {elapsed:.1f} s")


def test_criterion_2_homology_survives_the_map(verdict):
    world = three_tree_world()
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    chains = [build_chain(f) for f in enumerate_forests(world)]
    worlds = [point_world(c) for c in chains]
    agree = distinct = 0
    for _ in range(100):
        k = int(rng.integers(len(chains)))
        chain, pw = chains[k], worlds[k]
        markers = chain.forest.root_centers()  # one marker inside each tree
        paths = []
        while len(paths) < 2:
            p = integrate_forest_path(chain, random_feasible_weights(rng, 3), world.start, IntegrationConfig(),
                                      "conjugate", pw)
            if p.converged:
                paths.append(p)
        before = np.max(np.abs(h_signature_markers(paths[0], markers).components
                               - h_signature_markers(paths[1], markers).components)) < 1e-6
        after = homologous(pw, map_path(chain, paths[0]), map_path(chain, paths[1]))
        agree += before == after
        distinct += not before
    elapsed = time.perf_counter() - t0
    ok = agree == 100 and elapsed < 60.0
    assert verdict(2, ok, f"{agree}/100 agree ({distinct} non-homologous pairs), {elapsed:.1f} s")


def test_criterion_3_paths_are_safe_and_converge(verdict):
    rng = np.random.default_rng(3)
    base = random_point_world(rng, 5)
    cfg = IntegrationConfig()
    safe = converged = 0
    for _ in range(100):
        while True:
            start = rng.uniform(0.0, 10.0, 2)
            anchors = np.vstack([base.points_array, base.goal_array])
            if np.min(np.linalg.norm(anchors - start, axis=1)) > 1e-3:
                break
        world = PointWorld(base.points, tuple(start), base.goal)
        path = integrate_point_path(world, random_feasible_weights(rng, 5), start, cfg)
        safe += bool(np.min(path_distances(world, path)) > 0.0)
        converged += path.converged
    ok = safe == 100 and converged >= 99
    assert verdict(3, ok, f"{safe}/100 collision-free, {converged}/100 converged within {cfg.max_steps} steps")


def test_criterion_4_candidate_count(verdict):
    counts = {m: len(candidate_signatures(random_point_world(np.random.default_rng(m), m))) for m in range(1, 7)}
    distinct = all(len({c.signs for c in candidate_signatures(random_point_world(np.random.default_rng(m), m))})
                   == 2 ** m for m in range(1, 7))
    ok = all(counts[m] == 2 ** m for m in counts) and distinct and counts[6] == 64
    assert verdict(4, ok, f"counts {counts}")


def line10(sol) -> bool:
    pw = point_world(build_chain(sol.forest))
    return sol.point_path.converged and sign_vector(pw, sol.point_path) == sol.signs


def test_criterion_5_enumeration_bounds(verdict):
    t0 = time.perf_counter()
    poly = load_workspace(ROOT / "workspaces" / "polygon.json").world
    assert poly.trees == polygon_world().trees
    depths = [max(t.depths().values()) for t in poly.trees]
    report = EnumerationReport()
    sols = enumerate_classes(poly, PlannerConfig(), report)
    signs = [s.signs for s in sols]
    poly_ok = (report.n_structures == 54 and max(depths) <= 3 and 8 <= len(set(signs)) <= 64
               and len(set(signs)) == len(signs) and all(line10(s) for s in sols))
    t_poly = time.perf_counter() - t0

    desk = load_workspace(ROOT / "workspaces" / "desk.json").world
    admitted = {s.signs for s in enumerate_classes(desk, PlannerConfig())}
    oracle = set(reachable_classes(desk, 10_000, seed=0))
    golden = {tuple(c) for c in json.loads((ROOT / "tests" / "data" / "desk_golden.json").read_text())["classes"]}
    desk_ok = admitted == oracle == golden
    elapsed = time.perf_counter() - t0
    ok = poly_ok and desk_ok and elapsed < 600.0
    assert verdict(5, ok, f"polygon: {len(set(signs))} classes of {report.n_candidates} candidates over "
                          f"{report.n_structures} structures in {t_poly:.0f} s; desk: admitted {sorted(admitted)} vs "
                          f"oracle {sorted(oracle)}; total {elapsed:.0f} s")


def test_criterion_6_gradient_fidelity(verdict):
    rng = np.random.default_rng(6)
    h = 1e-7
    worst_point = 0.0
    checked = 0
    while checked < 1000:
        world = random_point_world(rng, int(rng.integers(1, 7)))
        w = random_feasible_weights(rng, world.n_obstacles)
        q = rng.uniform(0.0, 10.0, 2)
        if np.min(np.linalg.norm(np.vstack([world.points_array, world.goal_array]) - q, axis=1)) < 0.05:
            continue
        g = point_gradient(world, w, q)
        fd = np.array([(point_potential(world, w, q + h * e) - point_potential(world, w, q - h * e)) / (2 * h)
                       for e in np.eye(2)])
        worst_point = max(worst_point, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
        checked += 1

    chain = build_chain(three_tree_world())
    pw = point_world(chain)
    wf = WeightVector(6.0, (1.0, 0.5, 2.0))
    worst_forest, hf, n_forest = 0.0, 1e-5, 0
    while n_forest < 100:
        p = rng.uniform(0.5, 9.5, 2)
        if chain.forest.clearance(p)[0] < 0.05:
            continue
        # differences of a saturated sigmoid are rounding error only
        if not 1e-6 < forest_potential(chain, wf, p, pw) < 1 - 1e-6:
            continue
        g = forest_gradient(chain, wf, p, pw)
        fd = np.array([(forest_potential(chain, wf, p + hf * e, pw) - forest_potential(chain, wf, p - hf * e, pw))
                       / (2 * hf) for e in np.eye(2)])
        worst_forest = max(worst_forest, np.linalg.norm(g - fd) / np.linalg.norm(fd))
        n_forest += 1

    world = random_point_world(rng, 4)
    w = WeightVector(6.0, (1.0, 0.5, 2.0, 0.7))
    hl, worst_lap = 1e-4, 0.0
    for q in rng.uniform(0.0, 10.0, (200, 2)):
        if np.min(np.linalg.norm(np.vstack([world.points_array, world.goal_array]) - q, axis=1)) < 0.1:
            continue
        lap = sum(point_potential(world, w, q + hl * e) + point_potential(world, w, q - hl * e) for e in np.eye(2))
        worst_lap = max(worst_lap, abs(lap - 4 * point_potential(world, w, q)) / hl**2)
    ok = worst_point < 1e-6 and worst_forest < 1e-5 and worst_lap < 1e-3
    assert verdict(6, ok, f"point gradient rel err {worst_point:.1e}, forest gradient rel err {worst_forest:.1e}, "
                          f"|laplacian| {worst_lap:.1e}")


def grid_projection(r, eta):
    """Coarse-to-fine grid search for the nearest feasible point."""
    center, step, half = np.maximum(r, eta), 0.1, 4.0
    for _ in range(4):
        axes = [np.arange(c - half, c + half + step / 2, step) for c in center]
        g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        g = g[(g[:, 1] >= eta) & (g[:, 2] >= eta) & (g[:, 0] - g[:, 1] - g[:, 2] >= 1 + eta)]
        center = g[np.argmin(np.sum((g - r) ** 2, axis=1))]
        half, step = 2 * step, step / 10
    return center


def test_criterion_7_projection(verdict):
    eta = OptimizerConfig().margin
    rng = np.random.default_rng(7)
    worst, exact = 0.0, True
    for _ in range(50):
        r = rng.uniform(-1.0, 4.0, 3)
        w = project_weights(WeightVector.from_array(r))
        worst = max(worst, np.linalg.norm(w.as_array() - grid_projection(r, eta)))
        exact &= min(w.obstacle_weights) >= eta and halfspace_slack(w) >= eta - 1e-12
    idem = 0
    for _ in range(100):
        w = project_weights(WeightVector.from_array(rng.uniform(-3.0, 5.0, int(rng.integers(2, 8)))))
        exact &= min(w.obstacle_weights) >= eta and halfspace_slack(w) >= eta - 1e-12
        idem += project_weights(w) == w
    ok = worst < 1e-3 and exact and idem == 100
    assert verdict(7, ok, f"max distance to grid oracle {worst:.1e}, constraints exact {exact}, idempotent {idem}/100")


def lower_saddle_flip(world, w2=1.0, wg=12.0):
    """Obstacle weight ``w1`` at which the start's flow line meets the lower saddle.

    Flow lines are level sets of the harmonic conjugate
    ``wg arg(z - g) - w1 arg(z - P1) - w2 arg(z - P2)``; a flow line through a
    saddle separates the classes, so the flip is where the conjugate takes
    equal values at the start and at the saddle.
    """
    g = complex(*world.goal)
    p1, p2 = (complex(*p) for p in world.points)
    s = complex(*world.start)

    def gap(w1):
        # critical points of the complex potential: roots of a quadratic
        poly = (wg * np.poly1d([1, -p1]) * np.poly1d([1, -p2]) - w1 * np.poly1d([1, -g]) * np.poly1d([1, -p2])
                - w2 * np.poly1d([1, -g]) * np.poly1d([1, -p1]))
        z = min(poly.roots, key=lambda r: r.imag)
        return (wg * np.angle((z - g) / (s - g)) - w1 * np.angle((z - p1) / (s - p1))
                - w2 * np.angle((z - p2) / (s - p2)))

    return brentq(gap, 1.0, 5.0, xtol=1e-12)


def sweep_flip(world, lo=1.0, hi=5.0, w2=1.0, wg=12.0):
    def signs(w1):
        return sign_vector(world, integrate_point_path(world, WeightVector(wg, (w1, w2)), world.start, ADAPTIVE))
    s_lo = signs(lo)
    assert signs(hi) != s_lo
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if signs(mid) == s_lo else (lo, mid)
    return 0.5 * (lo + hi)


@pytest.mark.xfail(strict=True, reason="only 3 of the 4 sign vectors are reachable in a 2-obstacle world")
def test_criterion_8_optimizer_reaches_every_class(verdict):
    pw = point_world(build_chain(enumerate_forests(gate_world())[0]))
    analytic, swept = lower_saddle_flip(pw), sweep_flip(pw)
    threshold_ok = abs(analytic - swept) < 1e-4 * analytic
    reachable = set(reachable_classes(gate_world(), 10_000, seed=0))
    cfg = OptimizerConfig(stop_on_match=True)
    start = sign_vector(pw, integrate_point_path(pw, WeightVector.default(2), pw.start, ADAPTIVE))
    reached = {}
    for target in candidate_signatures(pw):
        _, trace = optimize_weights(pw, WeightVector.default(2), target, cfg, ADAPTIVE)
        flips = sum(a != b for a, b in zip(start, target.signs))
        hit = trace.final_signature.signs == target.signs and len(trace.iterates) <= cfg.max_iters + 1
        reached[target.signs] = (hit and len(trace.discontinuity_iters) >= min(flips, 1), trace.discontinuity_iters)
    n_hit = sum(v[0] for v in reached.values())
    ok = threshold_ok and n_hit == 4
    detail = (f"flip threshold sweep {swept:.6f} vs analytic {analytic:.6f}; oracle reaches {len(reachable)} sign "
              f"vectors; optimizer reached {n_hit}/4: "
              + ", ".join(f"{s}: {'yes' if v[0] else 'no'} {v[1]}" for s, v in reached.items()))
    assert verdict(8, ok, detail)


def test_criterion_9_determinism(verdict, tmp_path):
    ws = str(ROOT / "workspaces" / "desk.json")
    codes = [main(["enumerate", ws, "--out", str(tmp_path / d), "--seed", "3"]) for d in ("a", "b")]
    a, b = ((tmp_path / d / "solutions.json").read_bytes() for d in ("a", "b"))
    ok = codes == [0, 0] and a == b
    assert verdict(9, ok, f"exit codes {codes}, solutions.json identical: {a == b} ({len(a)} bytes)")


def complexity_world(m: int):
    rng = np.random.default_rng(100 + m)
    centers = []
    while len(centers) < m:
        c = rng.uniform(2.0, 8.0, 2)
        if all(np.linalg.norm(c - d) > 1.2 for d in centers):
            centers.append(c)
    return disc_world(centers)


def test_criterion_10_complexity_shape(verdict):
    # a fixed iteration budget per class isolates the number of classes and the per-class cost
    cfg = PlannerConfig(optimizer=OptimizerConfig(max_iters=3), forest_paths=False)
    counts, model = {}, {}
    for m in (3, 5, 8):
        world = complexity_world(m)
        n = max(len(t) for t in world.trees)
        i0, b0 = flow.integration_count, transform.build_count
        enumerate_classes(world, cfg)
        counts[m] = (flow.integration_count - i0) + (transform.build_count - b0)
        model[m] = 2 ** m * (m * n + m * m + m * n * n)
    ratios = np.array([counts[m] / model[m] for m in counts])
    c = math.exp(np.mean(np.log(ratios)))
    ok = bool(np.all(ratios <= 2 * c) and np.all(ratios >= c / 2))
    assert verdict(10, ok, f"counts {counts}, count/model {np.round(ratios / c, 2).tolist()} of the fit")
