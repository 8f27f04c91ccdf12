"""Diffeomorphism from a forest world to an unbounded point world.

The chain is a composition of radial stages, each centered at a point ``c``
and acting along rays ``c + t u(theta)`` as

    t  ->  t (1 + s(t, theta) (k(theta) - 1))

where ``k`` is the ratio of a target radius to a source radius and ``s`` is
a smooth switch that equals one on the source boundary and vanishes outside
a thin band around it. Stages come in this order:

1. purge: every non-root squircle is pushed onto its parent, leaves first;
2. star to sphere: the workspace boundary is pushed onto a circle of
   radius ``rho0`` about ``q0`` and each root squircle shrinks to its
   inscribed circle;
3. sphere to point: each circle collapses onto its center;
4. ``psi`` sends the disc of radius ``rho0`` onto the whole plane.

Bands are sized so they contain no other obstacle and never the goal, so the
goal and every root center are fixed points of stages 1-3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from . import _kernels as K
from .errors import InvalidForest, OutsideFreeSpace
from .geometry import ForestWorld, Squircle, squircle_beta
from .paths import PathPolyline

N_KNOTS = 2048
BOUNDARY_SAMPLES = 512
MARGIN_SAFETY = 0.5
MAX_INNER_MARGIN = 1.0
MAX_BAND_MARGIN = 0.25
PURGE_RAMP = 1e-7
SPHERE_INFLATION = 5.0  # rho0 over the circumradius; larger keeps psi close to the identity
JACOBIAN_STEP = 1e-6
FREE_TOL = 1e-9

_THETA = np.linspace(0.0, 2.0 * np.pi, N_KNOTS, endpoint=False)

# number of chains built in this process (read by the complexity tests)
build_count = 0


@dataclass(frozen=True)
class PointWorld:
    """Point obstacles plus mapped start and goal in the unbounded plane."""

    points: tuple[tuple[float, float], ...]
    start: tuple[float, float]
    goal: tuple[float, float]
    sphere_center: tuple[float, float] = (0.0, 0.0)
    sphere_radius: float = 1.0

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        object.__setattr__(self, "sphere_center", tuple(float(v) for v in self.sphere_center))
        if not self.sphere_radius > 0:
            raise ValueError("sphere_radius must be positive")
        if self.start == self.goal:
            raise ValueError("start and goal coincide")
        if len(set(pts)) != len(pts):
            raise ValueError("point obstacles must be distinct")
        if self.start in pts or self.goal in pts:
            raise ValueError("start/goal coincide with a point obstacle")

    @property
    def n_obstacles(self) -> int:
        return len(self.points)

    @property
    def points_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(-1, 2)

    @property
    def start_array(self) -> np.ndarray:
        return np.array(self.start)

    @property
    def goal_array(self) -> np.ndarray:
        return np.array(self.goal)


def squircle_params(s: Squircle) -> np.ndarray:
    return np.array([s.center[0], s.center[1], math.cos(s.orientation), math.sin(s.orientation),
                     2.0 / s.width, 2.0 / s.height, s.kappa])


def _rays() -> np.ndarray:
    return np.column_stack([np.cos(_THETA), np.sin(_THETA)])


def radius_table(s: Squircle, center) -> np.ndarray:
    """Distance from ``center`` (inside ``s``) to the boundary along each knot ray."""
    c = np.asarray(center, dtype=float)
    if squircle_beta(s, c) >= 0.0:
        raise InvalidForest("ray center is not inside the squircle")
    u = _rays()
    lo = np.zeros(N_KNOTS)
    hi = np.full(N_KNOTS, 2.0 * (s.circumradius() + np.linalg.norm(c - s.center_array)) + 1.0)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        inside = squircle_beta(s, c + mid[:, None] * u) < 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def _spline(r) -> np.ndarray:
    r = np.broadcast_to(np.asarray(r, dtype=float), (N_KNOTS,))
    knots = np.append(_THETA, 2.0 * np.pi)
    return np.ascontiguousarray(CubicSpline(knots, np.append(r, r[0]), bc_type="periodic").c)


def _polar(points, center):
    d = np.atleast_2d(points) - np.asarray(center)
    return np.hypot(d[:, 0], d[:, 1]), np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * np.pi)


def _radius_at(coef, theta) -> np.ndarray:
    return np.array([K.spline_eval(coef, t) for t in np.atleast_1d(theta)])


@dataclass(frozen=True)
class RadialStage:
    """One radial map; ``kind`` is ``"inner"`` or ``"outer"``."""

    name: str
    kind: str
    center: tuple[float, float]
    src: np.ndarray = field(repr=False)
    tgt: np.ndarray = field(repr=False)
    margin: float
    sharpness: float
    ramp: float = 0.0
    guard: Squircle | None = None


@dataclass(frozen=True, eq=False)
class DiffeoChain:
    forest: ForestWorld
    switch_sharpness: float
    stages: tuple[RadialStage, ...]
    sphere_center: tuple[float, float]
    sphere_radius: float
    n_purge: int
    n_star: int

    def __post_init__(self):
        guards = [s.guard for s in self.stages if s.guard is not None]
        gidx, g = [], 0
        for s in self.stages:
            if s.guard is None:
                gidx.append(-1)
            else:
                gidx.append(g)
                g += 1
        n = len(self.stages)
        packed = (
            np.array([s.center for s in self.stages], dtype=float).reshape(n, 2),
            np.array([K.INNER if s.kind == "inner" else K.OUTER for s in self.stages], dtype=np.int64),
            np.array([s.src for s in self.stages]).reshape(n, 4, N_KNOTS),
            np.array([s.tgt for s in self.stages]).reshape(n, 4, N_KNOTS),
            np.array([s.margin for s in self.stages], dtype=float),
            np.array([s.sharpness for s in self.stages], dtype=float),
            np.array([s.ramp for s in self.stages], dtype=float),
            np.array(gidx, dtype=np.int64),
            np.array([squircle_params(q) for q in guards]).reshape(-1, 7) if guards else np.zeros((1, 7)),
            np.array(self.sphere_center, dtype=float),
            float(self.sphere_radius),
        )
        object.__setattr__(self, "_packed", packed)
        obstacles = [squircle_params(q) for q in self.forest.obstacles()]
        object.__setattr__(self, "_obstacles", np.array(obstacles).reshape(-1, 7))
        object.__setattr__(self, "_boundary", squircle_params(self.forest.boundary))

    @property
    def packed(self):
        """Array arguments for the compiled chain evaluators."""
        return self._packed

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def obstacle_params(self) -> np.ndarray:
        return self._obstacles

    @property
    def boundary_params(self) -> np.ndarray:
        return self._boundary

    def clearance(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([K.free_margin(self._obstacles, self._boundary, x, y) for x, y in pts])

    def evaluate(self, points, s0: int = 0, s1: int | None = None, psi_on: bool = True) -> np.ndarray:
        """Apply stages ``s0 .. s1-1`` (and optionally ``psi``) without free-space checks."""
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        s1 = self.n_stages if s1 is None else s1
        return K.chain_many(pts, s0, s1, psi_on, *self._packed)


def psi(q, center, radius) -> np.ndarray:
    """Unbounding map ``rho0 / (rho0 - |q - q0|) (q - q0) + q0``."""
    q = np.asarray(q, dtype=float)
    d = q - np.asarray(center)
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = radius / (radius - r) * d + np.asarray(center)
    return np.where(r < radius, out, np.nan)


def psi_jacobian(q, center, radius) -> np.ndarray:
    d = np.asarray(q, dtype=float) - np.asarray(center)
    r = float(np.linalg.norm(d))
    f = radius / (radius - r)
    jac = f * np.eye(2)
    if r > 0.0:
        jac += radius / (radius - r) ** 2 * np.outer(d, d) / r
    return jac


def bounding_sphere(boundary: Squircle, inflation: float = SPHERE_INFLATION) -> tuple[tuple[float, float], float]:
    return boundary.center, inflation * boundary.circumradius()


def _purge_center(leaf: Squircle, parent: Squircle) -> np.ndarray:
    """Point deepest inside both squircles (maximizes min(-beta_leaf, -beta_parent))."""
    g = np.linspace(-1.0, 1.0, 41)
    grid = leaf.from_unit(np.array(np.meshgrid(g, g)).reshape(2, -1).T)

    def depth(p):
        return np.minimum(-squircle_beta(leaf, p), -squircle_beta(parent, p))

    best = grid[np.argmax(depth(grid))]
    res = minimize(lambda p: -float(depth(p)), best, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    c = res.x if -res.fun >= float(depth(best)) else best
    if float(depth(c)) <= 0.0:
        raise InvalidForest("tree edge joins squircles without a common interior")
    return c


def _inner_margin(center, coef, forbidden) -> float:
    if len(forbidden) == 0:
        return MAX_INNER_MARGIN
    t, theta = _polar(forbidden, center)
    ratio = t / _radius_at(coef, theta) - 1.0
    gap = float(np.min(ratio))
    if gap <= 0.0:
        raise InvalidForest("obstacle or goal too close to transform band")
    return min(MAX_INNER_MARGIN, MARGIN_SAFETY * gap)


def _outer_margin(center, coef, forbidden) -> float:
    if len(forbidden) == 0:
        return MAX_BAND_MARGIN
    t, theta = _polar(forbidden, center)
    gap = float(np.min(1.0 - t / _radius_at(coef, theta)))
    if gap <= 0.0:
        raise InvalidForest("obstacle or goal too close to workspace boundary")
    return min(MAX_BAND_MARGIN, MARGIN_SAFETY * gap)


def _circle_points(center, radius, n=BOUNDARY_SAMPLES) -> np.ndarray:
    a = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.asarray(center) + radius * np.column_stack([np.cos(a), np.sin(a)])


def _stack(arrays) -> np.ndarray:
    arrays = [np.atleast_2d(a) for a in arrays if len(a)]
    return np.vstack(arrays) if arrays else np.zeros((0, 2))


def build_chain(forest: ForestWorld, switch_sharpness: float = 1.0,
                sphere_inflation: float = SPHERE_INFLATION) -> DiffeoChain:
    """Build the forest-to-point-world chain for the current root assignment."""
    global build_count
    if not switch_sharpness > 0:
        raise ValueError("switch_sharpness must be positive")
    forest.validate()
    build_count += 1
    lam = float(switch_sharpness)
    goal = np.atleast_2d(forest.goal)
    wall = forest.boundary.boundary_points(BOUNDARY_SAMPLES)
    samples = {(ti, ni): node.boundary_points(BOUNDARY_SAMPLES)
               for ti, tree in enumerate(forest.trees) for ni, node in enumerate(tree.nodes)}

    stages = []
    alive = set(samples)
    for ti, tree in enumerate(forest.trees):
        parent_of = tree.parent_of()
        for leaf_i in tree.purge_order():
            parent_i = parent_of[leaf_i]
            leaf, parent = tree.nodes[leaf_i], tree.nodes[parent_i]
            c = _purge_center(leaf, parent)
            src, tgt = _spline(radius_table(leaf, c)), _spline(radius_table(parent, c))
            others = [samples[key] for key in alive if key not in ((ti, leaf_i), (ti, parent_i))]
            forbidden = _stack(others + [goal, wall])
            forbidden = forbidden[squircle_beta(parent, forbidden) >= 0.0]
            margin = _inner_margin(c, src, forbidden)
            stages.append(RadialStage(f"purge:{ti}:{tree.labels[leaf_i]}", "inner", tuple(c), src, tgt,
                                      margin, lam, PURGE_RAMP, parent))
            alive.discard((ti, leaf_i))
    n_purge = len(stages)

    q0, rho0 = bounding_sphere(forest.boundary, sphere_inflation)
    roots = [tree.root_squircle for tree in forest.trees]
    root_samples = [samples[(ti, tree.root)] for ti, tree in enumerate(forest.trees)]
    wall_coef = _spline(radius_table(forest.boundary, q0))
    margin = _outer_margin(q0, wall_coef, _stack(root_samples + [goal]))
    stages.append(RadialStage("band", "outer", tuple(q0), wall_coef, _spline(rho0), margin, lam))

    radii = []
    for ti, root in enumerate(roots):
        c = root.center
        r = radius_table(root, c)
        radii.append(float(np.min(r)))
        src = _spline(r)
        forbidden = _stack([s for tj, s in enumerate(root_samples) if tj != ti] + [goal, wall])
        margin = _inner_margin(c, src, forbidden)
        stages.append(RadialStage(f"star:{ti}", "inner", c, src, _spline(radii[-1]), margin, lam))
    n_star = len(stages) - n_purge

    for ti, root in enumerate(roots):
        c = root.center
        src = _spline(radii[ti])
        circles = [_circle_points(roots[tj].center, radii[tj]) for tj in range(len(roots)) if tj != ti]
        margin = _inner_margin(c, src, _stack(circles + [goal, wall]))
        stages.append(RadialStage(f"point:{ti}", "inner", c, src, _spline(0.0), margin, lam))

    return DiffeoChain(forest, lam, tuple(stages), q0, rho0, n_purge, n_star)


def _check_free(chain: DiffeoChain, pts: np.ndarray) -> None:
    clear = chain.clearance(pts)
    bad = np.flatnonzero(clear < -FREE_TOL)
    if bad.size:
        i = int(bad[0])
        raise OutsideFreeSpace(f"point {pts[i].tolist()} is outside free space", index=i)


def map_points(chain: DiffeoChain, points) -> np.ndarray:
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    _check_free(chain, pts)
    return chain.evaluate(pts)


def map_point(chain: DiffeoChain, p) -> np.ndarray:
    return map_points(chain, p)[0]


def map_jacobian(chain: DiffeoChain, p) -> np.ndarray:
    """Central-difference Jacobian of the full chain at ``p``."""
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    _check_free(chain, pts)
    return K.chain_jacobian(float(pts[0, 0]), float(pts[0, 1]), JACOBIAN_STEP, chain.n_stages,
                            *chain.packed)


def map_jacobians(chain: DiffeoChain, points) -> np.ndarray:
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    _check_free(chain, pts)
    return K.chain_jacobian_many(pts, JACOBIAN_STEP, chain.n_stages, *chain.packed)


def point_world(chain: DiffeoChain) -> PointWorld:
    """Point world induced by ``chain``: images of the root centers, start and goal."""
    forest = chain.forest
    start, goal = map_points(chain, np.array([forest.start, forest.goal]))
    pts = psi(forest.root_centers(), chain.sphere_center, chain.sphere_radius)
    return PointWorld(tuple(map(tuple, pts)), tuple(start), tuple(goal), chain.sphere_center,
                      chain.sphere_radius)


def root_points(forest: ForestWorld, sphere_inflation: float = SPHERE_INFLATION) -> np.ndarray:
    """Point obstacles of ``forest`` without building the chain (root centers are fixed)."""
    q0, rho0 = bounding_sphere(forest.boundary, sphere_inflation)
    return psi(forest.root_centers(), q0, rho0)


def map_path(chain: DiffeoChain, path: PathPolyline) -> PathPolyline:
    """Pointwise image of ``path``; sample count and time stamps are kept."""
    return PathPolyline(map_points(chain, path.samples), path.times.copy(), path.converged, "point")
