"""Gradient-descent paths of the potentials in the point and forest worlds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InfeasibleWeights, NavError, OutsideFreeSpace, SingularStart
from .paths import PathPolyline
from .potential import WeightVector, is_feasible, point_gradient
from .transform import JACOBIAN_STEP, DiffeoChain, PointWorld, map_jacobian, map_point, point_world

MAX_KICKS = 100
NEWTON_ITERS = 30
NO_ANCHOR = np.array([np.nan, np.nan])

# number of path integrations in this process (read by the complexity tests)
integration_count = 0


@dataclass(frozen=True)
class IntegrationConfig:
    """RK4 settings.

    With ``adaptive`` the point-world step grows to ``rel_step`` times the
    distance to the nearest obstacle or goal, clipped to ``[step, max_step]``.
    Every step is also kept below a quarter of the nearest-obstacle distance.
    """

    step: float = 0.01
    goal_tol: float = 0.05
    max_steps: int = 100_000
    saddle_tol: float = 1e-8
    saddle_kick: float = 1e-4
    seed: int = 0
    adaptive: bool = False
    max_step: float = 0.5
    rel_step: float = 0.05

    def __post_init__(self):
        if not (self.step > 0 and self.goal_tol > 0 and self.max_steps > 0):
            raise ValueError("step, goal_tol and max_steps must be positive")
        if self.max_step < self.step:
            raise ValueError("max_step must be at least step")


def escape_saddle(q, grad_norm: float, cfg: IntegrationConfig, rng: np.random.Generator) -> np.ndarray:
    """Kick ``q`` by ``cfg.saddle_kick`` in a random direction if the gradient vanishes."""
    q = np.asarray(q, dtype=float)
    if grad_norm >= cfg.saddle_tol:
        return q
    a = rng.uniform(0.0, 2.0 * math.pi)
    return q + cfg.saddle_kick * np.array([math.cos(a), math.sin(a)])


def _log_hessian(d: np.ndarray) -> np.ndarray:
    """Hessian of ``ln |d|^2``."""
    r2 = float(d @ d)
    return 2.0 * (np.eye(2) * r2 - 2.0 * np.outer(d, d)) / r2**2


def point_hessian(world: PointWorld, w: WeightVector, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    hess = w.goal_weight * _log_hessian(q - world.goal_array)
    for wi, p in zip(w.obstacle_weights, world.points_array):
        hess -= wi * _log_hessian(q - p)
    return hess


def _newton(q, step_fn, reach: float) -> np.ndarray:
    """Newton iterations from ``q``; falls back to ``q`` if they wander beyond ``reach``."""
    q0 = q = np.asarray(q, dtype=float)
    try:
        for _ in range(NEWTON_ITERS):
            dq = step_fn(q)
            q = q - dq
            if not np.all(np.isfinite(q)) or np.linalg.norm(q - q0) > reach:
                return q0
            if np.linalg.norm(dq) < 1e-13 * (1.0 + np.linalg.norm(q)):
                break
    except (NavError, np.linalg.LinAlgError):
        return q0
    return q


def locate_point_saddle(world: PointWorld, w: WeightVector, q, reach: float) -> np.ndarray:
    """Critical point of the point-world potential near a stalled iterate ``q``."""
    return _newton(q, lambda x: np.linalg.solve(point_hessian(world, w, x), point_gradient(world, w, x)), reach)


def locate_forest_saddle(chain: DiffeoChain, world: PointWorld, w: WeightVector, p, reach: float) -> np.ndarray:
    """Preimage of a point-world critical point near a stalled forest iterate ``p``."""

    def step(x):
        if chain.clearance(x)[0] <= 0.0:
            raise OutsideFreeSpace("Newton iterate left free space")
        q = map_point(chain, x)
        return np.linalg.solve(point_hessian(world, w, q) @ map_jacobian(chain, x), point_gradient(world, w, q))

    return _newton(p, step, reach)


def _check_weights(w: WeightVector, n: int) -> None:
    if len(w) != n:
        raise InfeasibleWeights(f"expected {n} obstacle weights, got {len(w)}")
    if not is_feasible(w, 0.0):
        raise InfeasibleWeights("weights violate w_g >= sum(w_i) + 1")


def _finish(chunks, goal, converged, tag) -> PathPolyline:
    samples = np.vstack(chunks)
    if converged:
        samples = np.vstack([samples, goal])
    return PathPolyline.from_samples(samples, converged, tag)


def integrate_point_path(world: PointWorld, w: WeightVector, q_start, cfg: IntegrationConfig = IntegrationConfig()) -> PathPolyline:
    """Normalized negative-gradient RK4 path from ``q_start`` towards the goal."""
    global integration_count
    integration_count += 1
    _check_weights(w, world.n_obstacles)
    q = np.asarray(q_start, dtype=float)
    goal = world.goal_array
    obstacles = np.ascontiguousarray(world.points_array)
    anchors = np.vstack([goal, obstacles])
    if np.min(np.linalg.norm(anchors - q, axis=1)) < 1e-12:
        raise SingularStart(f"start {q.tolist()} coincides with the goal or an obstacle")
    weights = w.as_array()
    rng = np.random.default_rng(cfg.seed)
    chunks, budget, anchor = [], cfg.max_steps, NO_ANCHOR
    for _ in range(MAX_KICKS + 1):
        out = np.empty((budget + 1, 2))
        count, status = K.integrate_point(q, goal, obstacles, weights, cfg.step, cfg.max_step,
                                          cfg.rel_step, cfg.adaptive, cfg.goal_tol, budget,
                                          cfg.saddle_tol, anchor, out)
        chunks.append(out[:count])
        budget -= count - 1
        q = out[count - 1].copy()
        if status != K.SADDLE or budget <= 0:
            break
        # kick off the saddle itself, then let the steps grow with the distance from it
        anchor = locate_point_saddle(world, w, q, 2.0 * cfg.max_step)
        q = escape_saddle(anchor, 0.0, cfg, rng)
    return _finish(chunks, goal, status == K.CONVERGED, "point")


def integrate_forest_path(chain: DiffeoChain, w: WeightVector, p_start,
                          cfg: IntegrationConfig = IntegrationConfig(), flow: str = "gradient",
                          world: PointWorld | None = None) -> PathPolyline:
    """RK4 path of the pulled-back potential in the forest world.

    ``flow="gradient"`` follows the normalized negative forest gradient
    ``-J^T grad phi_P``. ``flow="conjugate"`` follows ``-J^{-1} grad phi_P``,
    the pullback of the point-world flow, so its image under the chain traces
    the point-world path from the mapped start.
    """
    global integration_count
    integration_count += 1
    if flow not in ("gradient", "conjugate"):
        raise ValueError(f"unknown flow {flow!r}")
    world = point_world(chain) if world is None else world
    _check_weights(w, world.n_obstacles)
    p = np.asarray(p_start, dtype=float)
    map_point(chain, p)  # raises OutsideFreeSpace
    if chain.clearance(p)[0] <= 0.0:
        raise OutsideFreeSpace(f"start {p.tolist()} is not in free space", index=0)
    p_goal = np.array(chain.forest.goal)
    rng = np.random.default_rng(cfg.seed)
    weights = w.as_array()
    pobs = np.ascontiguousarray(world.points_array)
    chunks, budget, anchor = [], cfg.max_steps, NO_ANCHOR
    for _ in range(MAX_KICKS + 1):
        out = np.empty((budget + 1, 2))
        count, status = K.integrate_forest(
            p, p_goal, flow == "conjugate", cfg.step, cfg.goal_tol, budget, cfg.saddle_tol, anchor,
            JACOBIAN_STEP, chain.n_stages, *chain.packed, world.goal_array, pobs, weights,
            chain.obstacle_params, chain.boundary_params, out)
        chunks.append(out[:count])
        budget -= count - 1
        p = out[count - 1].copy()
        if status != K.SADDLE or budget <= 0:
            break
        anchor = locate_forest_saddle(chain, world, w, p, 2.0 * cfg.step)
        kicked = escape_saddle(anchor, 0.0, cfg, rng)
        if chain.clearance(kicked)[0] > 0.0:
            p = kicked
    return _finish(chunks, p_goal, status == K.CONVERGED, "forest")
