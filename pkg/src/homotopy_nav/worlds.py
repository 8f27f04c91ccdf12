"""Reference workspaces used by the tests, the acceptance suite and the demos."""

from __future__ import annotations

import numpy as np

from .geometry import ForestWorld, Squircle
from .transform import PointWorld

BOX = 0.9  # squareness of bars and walls


def bar(center, width, height, kappa: float = BOX) -> Squircle:
    return Squircle(tuple(center), width, height, 0.0, kappa)


def disc(center, diameter: float, kappa: float = 0.5) -> Squircle:
    return Squircle(tuple(center), diameter, diameter, 0.0, kappa)


def z_tree(cx: float, cy: float) -> list[Squircle]:
    """Three bars in a Z: horizontal, vertical, horizontal."""
    return [bar((cx - 0.35, cy + 0.45), 1.2, 0.45), bar((cx + 0.1, cy), 0.45, 1.2),
            bar((cx + 0.55, cy - 0.45), 1.2, 0.45)]


def l_tree(cx: float, cy: float) -> list[Squircle]:
    """Two bars in an L."""
    return [bar((cx, cy + 0.3), 0.45, 1.2), bar((cx + 0.4, cy - 0.3), 1.2, 0.45)]


def room(size: float = 10.0, center=(5.0, 5.0)) -> Squircle:
    return bar(center, size, size)


def gate_world(offset: float = 0.8) -> ForestWorld:
    """Two discs mirrored about the start-goal line, ``offset`` above and below it."""
    obstacles = [disc((5.0, 5.0 + offset), 0.6), disc((5.0, 5.0 - offset), 0.6)]
    return ForestWorld.from_obstacles(room(), obstacles, (1.5, 5.0), (8.5, 5.0))


def three_tree_world() -> ForestWorld:
    """A Z, an L and a disc: 3 trees and 6 structures."""
    obstacles = z_tree(3.0, 6.5) + l_tree(6.5, 3.0) + [disc((7.0, 7.0), 1.0)]
    return ForestWorld.from_obstacles(room(10.5), obstacles, (1.5, 1.5), (8.5, 8.5))


def desk_world() -> ForestWorld:
    """A desk and two chairs: 3 single-obstacle trees."""
    obstacles = [bar((5.0, 5.0), 2.4, 1.0), disc((3.5, 7.0), 0.8), disc((6.8, 3.0), 0.8)]
    return ForestWorld.from_obstacles(room(), obstacles, (1.5, 1.5), (8.5, 8.5))


# polygon world: (fraction along the start-goal line, signed offset across it) per tree
POLYGON_LAYOUT = ((0.84, 0.17), (0.63, -2.47), (0.09, 0.6), (0.21, -0.52), (0.69, -0.77), (0.56, 2.14))


def polygon_world(layout=POLYGON_LAYOUT, start=(2.5, 9.0), goal=(9.0, 1.0)) -> ForestWorld:
    """Three Z trees, an L tree and two boxes staggered along the start-goal line.

    Tree depths are at most 3 and the six trees admit 3 * 3 * 3 * 2 = 54 structures.
    """
    s, g = np.asarray(start, dtype=float), np.asarray(goal, dtype=float)
    d = g - s
    n = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    makers = [z_tree, z_tree, z_tree, l_tree, None, None]
    obstacles = []
    for (t, off), make in zip(layout, makers):
        c = s + t * d + off * n
        obstacles += [disc(c, 0.9)] if make is None else make(*c)
    return ForestWorld.from_obstacles(room(10.5), obstacles, start, goal)


def disc_world(centers, diameter: float = 0.6, start=(1.0, 1.0), goal=(9.0, 9.0)) -> ForestWorld:
    return ForestWorld.from_obstacles(room(), [disc(c, diameter) for c in centers], start, goal)


def random_point_world(rng: np.random.Generator, m: int, extent: float = 10.0,
                       min_gap: float = 0.5) -> PointWorld:
    """``m`` point obstacles, start and goal drawn uniformly with pairwise gaps of at least ``min_gap``."""
    while True:
        pts = rng.uniform(0.0, extent, (m + 2, 2))
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(m + 2) * extent
        if d.min() >= min_gap:
            return PointWorld(tuple(map(tuple, pts[:m])), tuple(pts[m]), tuple(pts[m + 1]),
                              (extent / 2, extent / 2), extent)
