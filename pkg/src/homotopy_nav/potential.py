"""Harmonic point-world potentials, their forest-world pullbacks and weight feasibility."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularPoint
from .transform import DiffeoChain, PointWorld, map_jacobian, map_point, point_world

SINGULAR_TOL = 1e-12
SIGMOID_CLAMP = 500.0


@dataclass(frozen=True)
class WeightVector:
    goal_weight: float
    obstacle_weights: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "goal_weight", float(self.goal_weight))
        object.__setattr__(self, "obstacle_weights", tuple(float(v) for v in self.obstacle_weights))

    @classmethod
    def default(cls, n_obstacles: int, goal_weight: float = 12.0, obstacle_weight: float = 1.0):
        return cls(goal_weight, (obstacle_weight,) * n_obstacles)

    @classmethod
    def from_array(cls, w: Sequence[float]) -> "WeightVector":
        w = np.asarray(w, dtype=float)
        return cls(float(w[0]), tuple(w[1:]))

    def as_array(self) -> np.ndarray:
        """``[w_g, w_1, ..., w_M]``."""
        return np.array((self.goal_weight,) + self.obstacle_weights)

    def __len__(self):
        return len(self.obstacle_weights)


def halfspace_slack(w) -> float:
    """``w_g - sum(w_i) - 1`` with a correctly rounded sum."""
    a = w.as_array() if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    return float(a[0] - math.fsum(a[1:]) - 1.0)


def is_feasible(w: WeightVector, margin: float = 0.0) -> bool:
    """Whether every weight is at least ``margin`` and ``w_g - sum(w_i) >= 1 + margin``."""
    a = w.as_array()
    if not np.all(np.isfinite(a)) or np.any(a < margin):
        return False
    return halfspace_slack(w) >= margin


def _check_singular(world: PointWorld, q: np.ndarray) -> None:
    anchors = np.vstack([world.goal_array, world.points_array])
    if np.min(np.linalg.norm(anchors - q, axis=1)) < SINGULAR_TOL:
        raise SingularPoint(f"potential is singular at {q.tolist()}")


def point_potential(world: PointWorld, w: WeightVector, q) -> float:
    """``w_g ln|q - q_g|^2 - sum_i w_i ln|q - P_i|^2``."""
    q = np.asarray(q, dtype=float)
    _check_singular(world, q)
    value = w.goal_weight * math.log(float(np.sum((q - world.goal_array) ** 2)))
    for wi, p in zip(w.obstacle_weights, world.points_array):
        value -= wi * math.log(float(np.sum((q - p) ** 2)))
    return value


def point_gradient(world: PointWorld, w: WeightVector, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    _check_singular(world, q)
    d = q - world.goal_array
    g = 2.0 * w.goal_weight * d / np.dot(d, d)
    for wi, p in zip(w.obstacle_weights, world.points_array):
        d = q - p
        g -= 2.0 * wi * d / np.dot(d, d)
    return g


def sigmoid(x: float) -> float:
    x = min(max(x, -SIGMOID_CLAMP), SIGMOID_CLAMP)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sigmoid_derivative(x: float) -> float:
    # written in |x| so neither tail cancels to zero
    e = math.exp(-min(abs(x), SIGMOID_CLAMP))
    return e / (1.0 + e) ** 2


def forest_potential(chain: DiffeoChain, w: WeightVector, p, world: PointWorld | None = None) -> float:
    """``sigmoid(phi_P(Phi(p)))``, a value in (0, 1)."""
    world = point_world(chain) if world is None else world
    return sigmoid(point_potential(world, w, map_point(chain, p)))


def forest_gradient(chain: DiffeoChain, w: WeightVector, p, world: PointWorld | None = None) -> np.ndarray:
    """Chain rule ``sigmoid'(phi) J^T grad phi_P``."""
    world = point_world(chain) if world is None else world
    q = map_point(chain, p)
    phi = point_potential(world, w, q)
    return sigmoid_derivative(phi) * (map_jacobian(chain, p).T @ point_gradient(world, w, q))
