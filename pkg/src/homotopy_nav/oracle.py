"""Brute-force reachability: classify paths of randomly drawn structures and weights.

Used as an independent reference for the optimizer-driven enumeration.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .flow import IntegrationConfig, integrate_point_path
from .geometry import ForestWorld, enumerate_forests
from .potential import WeightVector
from .topology import sign_vector
from .transform import SPHERE_INFLATION, build_chain, point_world


def random_feasible_weights(rng: np.random.Generator, m: int, margin: float = 0.1,
                            max_obstacle_weight: float = 3.0, max_goal_excess: float = 12.0) -> WeightVector:
    """Obstacle weights log-uniform in ``[margin, max_obstacle_weight]``, goal weight above the bound."""
    wi = np.exp(rng.uniform(np.log(margin), np.log(max_obstacle_weight), m))
    wg = wi.sum() + 1.0 + margin + rng.uniform(0.0, max_goal_excess)
    return WeightVector(wg, tuple(wi))


def reachable_classes(world: ForestWorld, n_samples: int = 10_000, seed: int = 0,
                      icfg: IntegrationConfig = IntegrationConfig(adaptive=True),
                      sphere_inflation: float = SPHERE_INFLATION, margin: float = 0.1) -> Counter:
    """Count converged point-world paths per sign vector over random structures and weights."""
    rng = np.random.default_rng(seed)
    forests = enumerate_forests(world)
    worlds = [point_world(build_chain(f, sphere_inflation=sphere_inflation)) for f in forests]
    counts: Counter = Counter()
    for _ in range(n_samples):
        pw = worlds[rng.integers(len(worlds))]
        w = random_feasible_weights(rng, pw.n_obstacles, margin)
        path = integrate_point_path(pw, w, pw.start, icfg)
        if path.converged:
            counts[sign_vector(pw, path)] += 1
    return counts
