"""Enumeration of realizable homotopy classes and single-class planning."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import flow, transform
from .errors import NavError, NotRealizable
from .flow import IntegrationConfig, integrate_forest_path, integrate_point_path
from .geometry import ForestWorld, Squircle, enumerate_forests, squircle_beta
from .optimizer import OptimizationTrace, OptimizerConfig, optimize_weights, select_structure
from .paths import PathPolyline
from .potential import WeightVector
from .topology import DSignature, candidate_distances, candidate_signatures, d_signature
from .transform import DiffeoChain, PointWorld, build_chain, map_path, point_world


@dataclass(frozen=True)
class PlannerConfig:
    optimizer: OptimizerConfig = OptimizerConfig(stop_on_match=True)
    # point-world paths inside the optimizer loop
    integration: IntegrationConfig = IntegrationConfig(adaptive=True)
    # forest-world path of each admitted class
    forest_integration: IntegrationConfig = IntegrationConfig()
    switch_sharpness: float = 1.0
    sphere_inflation: float = transform.SPHERE_INFLATION
    flow: str = "conjugate"
    goal_weight: float = 12.0
    obstacle_weight: float = 1.0
    forest_paths: bool = True


@dataclass(frozen=True, eq=False)
class Solution:
    forest: ForestWorld
    weights: WeightVector
    forest_path: PathPolyline | None
    point_path: PathPolyline
    signature: DSignature
    fisher: float
    candidate: int = -1
    # D-signature of the forest path's image, in the same point world
    forest_signature: DSignature | None = None
    trace: OptimizationTrace | None = field(default=None, repr=False)

    @property
    def signs(self) -> tuple[int, ...]:
        return self.signature.signs


@dataclass(frozen=True)
class RegionPreference:
    region: Squircle
    kind: str  # "restricted" or "bonus"

    def __post_init__(self):
        if self.kind not in ("restricted", "bonus"):
            raise ValueError(f"unknown region kind {self.kind!r}")


@dataclass
class EnumerationReport:
    failures: list = field(default_factory=list)  # dicts: candidate, signs, reason
    timings: dict = field(default_factory=dict)
    n_candidates: int = 0
    n_structures: int = 0
    path_integrations: int = 0
    chain_builds: int = 0


class _ChainCache:
    def __init__(self, cfg: PlannerConfig):
        self.cfg = cfg
        self._chains: dict[tuple[int, ...], tuple[DiffeoChain, PointWorld]] = {}

    def get(self, forest: ForestWorld) -> tuple[DiffeoChain, PointWorld]:
        key = forest.roots
        if key not in self._chains:
            chain = build_chain(forest, self.cfg.switch_sharpness, self.cfg.sphere_inflation)
            self._chains[key] = (chain, point_world(chain))
        return self._chains[key]


def _solve_class(world: ForestWorld, forests: Sequence[ForestWorld], target: DSignature, cfg: PlannerConfig,
                 cache: _ChainCache, index: int = -1) -> Solution:
    """Structure selection, weight optimization and the final sign check for one target class."""
    best, fisher = select_structure(forests, target, cfg.optimizer, cfg.sphere_inflation)
    chain, pw = cache.get(best)
    local = DSignature(target.signs, candidate_distances(pw, target.signs))
    w0 = WeightVector.default(pw.n_obstacles, cfg.goal_weight, cfg.obstacle_weight)
    w, trace = optimize_weights(pw, w0, local, cfg.optimizer, cfg.integration)
    point_path = integrate_point_path(pw, w, pw.start, cfg.integration)
    if not point_path.converged:
        raise NotRealizable("point-world path did not converge", trace)
    signature = d_signature(pw, point_path)
    if signature.signs != target.signs:
        raise NotRealizable(f"optimized path has signs {signature.signs}", trace)
    forest_path, forest_sig = None, None
    if cfg.forest_paths:
        forest_path = integrate_forest_path(chain, w, world.start, cfg.forest_integration, cfg.flow, pw)
        if not forest_path.converged:
            raise NotRealizable("forest path did not converge", trace)
        forest_sig = d_signature(pw, map_path(chain, forest_path))
        if forest_sig.signs != target.signs:
            raise NotRealizable(f"forest path realizes signs {forest_sig.signs}", trace)
    return Solution(best, w, forest_path, point_path, signature, fisher, index, forest_sig, trace)


def _trivial_solution(world: ForestWorld, cfg: PlannerConfig, cache: _ChainCache) -> Solution:
    chain, pw = cache.get(world)
    w = WeightVector(cfg.goal_weight, ())
    point_path = integrate_point_path(pw, w, pw.start, cfg.integration)
    forest_path = None
    if cfg.forest_paths:
        forest_path = integrate_forest_path(chain, w, world.start, cfg.forest_integration, cfg.flow, pw)
    empty = DSignature((), ())
    return Solution(world, w, forest_path, point_path, empty, float("inf"), 0, empty)


def enumerate_classes(world: ForestWorld, cfg: PlannerConfig = PlannerConfig(),
                      report: EnumerationReport | None = None) -> list[Solution]:
    """Every candidate class that the optimized potential realizes, in candidate order.

    Candidates are generated in the point world of the structure as given;
    each class then picks its own structure by Fisher distance. Classes that
    fail are recorded in ``report`` and skipped.
    """
    report = EnumerationReport() if report is None else report
    integrations0, builds0 = flow.integration_count, transform.build_count
    t0 = time.perf_counter()
    world.validate()
    cache = _ChainCache(cfg)
    forests = enumerate_forests(world)
    report.n_structures = len(forests)
    _, pw = cache.get(world)
    solutions: list[Solution] = []
    if pw.n_obstacles == 0:
        report.n_candidates = 1
        solutions.append(_trivial_solution(world, cfg, cache))
    else:
        candidates = candidate_signatures(pw)
        report.n_candidates = len(candidates)
        seen = set()
        for k, target in enumerate(candidates):
            try:
                sol = _solve_class(world, forests, target, cfg, cache, k)
            except NavError as exc:
                report.failures.append({"candidate": k, "signs": list(target.signs),
                                        "reason": f"{type(exc).__name__}: {exc}"})
                continue
            if sol.signs in seen:
                continue
            seen.add(sol.signs)
            solutions.append(sol)
    report.timings["enumerate"] = time.perf_counter() - t0
    report.path_integrations = flow.integration_count - integrations0
    report.chain_builds = transform.build_count - builds0
    return solutions


def plan_for_class(world: ForestWorld, target: DSignature | Sequence[int],
                   cfg: PlannerConfig = PlannerConfig()) -> Solution:
    """Plan one class; raises ``NotRealizable`` when the sign check fails."""
    world.validate()
    cache = _ChainCache(cfg)
    _, pw = cache.get(world)
    if not isinstance(target, DSignature):
        signs = tuple(int(s) for s in target)
        if len(signs) != pw.n_obstacles:
            raise ValueError(f"expected {pw.n_obstacles} signs, got {len(signs)}")
        target = DSignature(signs, candidate_distances(pw, signs)) if signs else DSignature((), ())
    if pw.n_obstacles == 0:
        return _trivial_solution(world, cfg, cache)
    return _solve_class(world, enumerate_forests(world), target, cfg, cache)


def _inside(region: Squircle, path: PathPolyline) -> np.ndarray:
    return np.atleast_1d(squircle_beta(region, path.samples)) <= 0.0


def filter_by_regions(solutions: Sequence[Solution], prefs: Sequence[RegionPreference]) -> list[Solution]:
    """Keep solutions avoiding every restricted region and visiting every bonus region."""
    kept = []
    for sol in solutions:
        path = sol.forest_path
        if path is None:
            raise ValueError("region filtering needs forest paths")
        ok = True
        for pref in prefs:
            hit = bool(np.any(_inside(pref.region, path)))
            if (pref.kind == "restricted" and hit) or (pref.kind == "bonus" and not hit):
                ok = False
                break
        if ok:
            kept.append(sol)
    return kept
