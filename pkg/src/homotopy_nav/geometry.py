"""Squircle obstacles, trees of overlapping squircles and forest worlds.

A squircle is the set ``beta(p) <= 0`` with

    beta(p) = (|p|^2 + sqrt(|p|^4 - 4 kappa^2 (x y)^2)) / 2 - 1

evaluated in the unit frame of the obstacle (translated to its center,
rotated by ``-orientation`` and scaled by ``2/width``, ``2/height``).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import CyclicAdjacency, IndexOutOfRange, InvalidForest

OVERLAP_SAMPLES = 256


def _wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.atan2(math.sin(theta), math.cos(theta))
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class Squircle:
    center: tuple[float, float]
    width: float
    height: float
    orientation: float = 0.0
    kappa: float = 0.5

    def __post_init__(self):
        cx, cy = (float(v) for v in self.center)
        object.__setattr__(self, "center", (cx, cy))
        if not (self.width > 0 and self.height > 0):
            raise ValueError("squircle width and height must be positive")
        if not (0.0 < self.kappa < 1.0):
            raise ValueError("squircle kappa must lie strictly inside (0, 1)")
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "orientation", _wrap_angle(float(self.orientation)))

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def axes(self) -> np.ndarray:
        """Base vectors e1, e2 (columns) of the obstacle frame."""
        c, s = math.cos(self.orientation), math.sin(self.orientation)
        return np.array([[c, -s], [s, c]])

    def to_unit(self, points) -> np.ndarray:
        """Map world points into the unit frame of the squircle."""
        p = np.asarray(points, dtype=float) - self.center_array
        local = p @ self.axes
        return local * np.array([2.0 / self.width, 2.0 / self.height])

    def from_unit(self, points) -> np.ndarray:
        local = np.asarray(points, dtype=float) * np.array([self.width / 2.0, self.height / 2.0])
        return local @ self.axes.T + self.center_array

    def boundary_points(self, n: int = OVERLAP_SAMPLES) -> np.ndarray:
        """``n`` points on the boundary, evenly spaced in unit-frame angle."""
        phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        c, s = np.cos(phi), np.sin(phi)
        a = (self.kappa * c * s) ** 2
        # smaller root of kappa^2 c^2 s^2 r^4 - r^2 + 1 = 0, in cancellation-free form
        r = np.sqrt(2.0 / (1.0 + np.sqrt(1.0 - 4.0 * a)))
        return self.from_unit(np.column_stack([r * c, r * s]))

    def circumradius(self) -> float:
        pts = self.boundary_points(2048)
        return float(np.max(np.linalg.norm(pts - self.center_array, axis=1)))


def _unit_beta(u: np.ndarray, kappa: float) -> np.ndarray:
    x, y = u[..., 0], u[..., 1]
    n = x * x + y * y
    rad = np.maximum(n * n - 4.0 * kappa**2 * (x * y) ** 2, 0.0)
    return 0.5 * (n + np.sqrt(rad)) - 1.0


def squircle_beta(s: Squircle, p) -> np.ndarray | float:
    """Implicit function of ``s``: negative inside, zero on the boundary."""
    u = s.to_unit(p)
    out = _unit_beta(u, s.kappa)
    return float(out) if np.ndim(out) == 0 else out


def squircle_beta_gradient(s: Squircle, p) -> np.ndarray:
    u = s.to_unit(p)
    x, y = u[..., 0], u[..., 1]
    n = x * x + y * y
    root = np.sqrt(np.maximum(n * n - 4.0 * s.kappa**2 * (x * y) ** 2, 0.0))
    safe = np.where(root > 0.0, root, 1.0)
    gx = np.where(root > 0.0, x + x * (n - 2.0 * s.kappa**2 * y * y) / safe, 0.0)
    gy = np.where(root > 0.0, y + y * (n - 2.0 * s.kappa**2 * x * x) / safe, 0.0)
    g_unit = np.stack([gx, gy], axis=-1) * np.array([2.0 / s.width, 2.0 / s.height])
    return g_unit @ s.axes.T


def detect_overlap(a: Squircle, b: Squircle) -> bool:
    """Whether the closed regions of ``a`` and ``b`` intersect (boundary sampling)."""
    if squircle_beta(a, b.center) <= 0.0 or squircle_beta(b, a.center) <= 0.0:
        return True
    if np.any(squircle_beta(b, a.boundary_points()) <= 0.0):
        return True
    return bool(np.any(squircle_beta(a, b.boundary_points()) <= 0.0))


@dataclass(frozen=True)
class TreeOfSquircles:
    """Rooted tree over a group of pairwise-overlapping squircles.

    ``labels`` carries the index of each node in the caller's obstacle list so
    results can be reported against the original workspace description.
    """

    nodes: tuple[Squircle, ...]
    edges: tuple[tuple[int, int], ...]
    root: int = 0
    labels: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(self.nodes))))

    def __len__(self):
        return len(self.nodes)

    @property
    def root_squircle(self) -> Squircle:
        return self.nodes[self.root]

    def parent_of(self) -> dict[int, int]:
        return {child: parent for parent, child in self.edges}

    def children_of(self, node: int) -> list[int]:
        return sorted(child for parent, child in self.edges if parent == node)

    def depths(self) -> dict[int, int]:
        """BFS depth of every node (root has depth 0)."""
        depth = {self.root: 0}
        queue = deque([self.root])
        while queue:
            node = queue.popleft()
            for child in self.children_of(node):
                depth[child] = depth[node] + 1
                queue.append(child)
        return depth

    def purge_order(self) -> list[int]:
        """Non-root nodes, deepest first, siblings by node index."""
        depth = self.depths()
        return sorted((n for n in depth if n != self.root), key=lambda n: (-depth[n], n))

    def undirected_edges(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)

    def validate(self) -> None:
        n = len(self.nodes)
        if n == 0:
            raise InvalidForest("empty tree")
        if not 0 <= self.root < n:
            raise InvalidForest("root index out of range")
        parent = {}
        for p, c in self.edges:
            if not (0 <= p < n and 0 <= c < n) or p == c:
                raise InvalidForest(f"bad edge {(p, c)}")
            if c in parent:
                raise InvalidForest(f"node {c} has two parents")
            parent[c] = p
        if self.root in parent:
            raise InvalidForest("root has a parent")
        if len(self.edges) != n - 1 or len(self.depths()) != n:
            raise InvalidForest("tree is not connected and acyclic")
        for p, c in self.edges:
            if not detect_overlap(self.nodes[p], self.nodes[c]):
                raise InvalidForest(f"edge {(p, c)} joins squircles that do not overlap")


def _bfs_edges(n_nodes: int, adjacency: dict[int, set[int]], root: int) -> tuple[tuple[int, int], ...]:
    seen = {root}
    queue = deque([root])
    edges = []
    while queue:
        node = queue.popleft()
        for nb in sorted(adjacency[node]):
            if nb not in seen:
                seen.add(nb)
                edges.append((node, nb))
                queue.append(nb)
    return tuple(edges)


def build_trees(obstacles: Sequence[Squircle]) -> list[TreeOfSquircles]:
    """Group obstacles into overlap-connected trees rooted at their lowest index."""
    n = len(obstacles)
    adjacency: dict[int, set[int]] = {i: set() for i in range(n)}
    for i, j in itertools.combinations(range(n), 2):
        if detect_overlap(obstacles[i], obstacles[j]):
            adjacency[i].add(j)
            adjacency[j].add(i)

    trees = []
    assigned: set[int] = set()
    for start in range(n):
        if start in assigned:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nb in adjacency[node] - component:
                component.add(nb)
                queue.append(nb)
        assigned |= component
        members = sorted(component)
        n_edges = sum(len(adjacency[m]) for m in members) // 2
        if n_edges != len(members) - 1:
            raise CyclicAdjacency(f"obstacles {members} form a cycle of overlaps")
        local = {g: k for k, g in enumerate(members)}
        local_adj = {local[g]: {local[h] for h in adjacency[g]} for g in members}
        trees.append(
            TreeOfSquircles(
                nodes=tuple(obstacles[g] for g in members),
                edges=_bfs_edges(len(members), local_adj, 0),
                root=0,
                labels=tuple(members),
            )
        )
    return trees


def reroot(tree: TreeOfSquircles, new_root: int) -> TreeOfSquircles:
    if not 0 <= new_root < len(tree.nodes):
        raise IndexOutOfRange(f"node {new_root} not in tree of size {len(tree.nodes)}")
    adjacency: dict[int, set[int]] = {i: set() for i in range(len(tree.nodes))}
    for p, c in tree.edges:
        adjacency[p].add(c)
        adjacency[c].add(p)
    return replace(tree, edges=_bfs_edges(len(tree.nodes), adjacency, new_root), root=new_root)


@dataclass(frozen=True)
class ForestWorld:
    boundary: Squircle
    trees: tuple[TreeOfSquircles, ...]
    start: tuple[float, float]
    goal: tuple[float, float]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))

    @classmethod
    def from_obstacles(cls, boundary, obstacles, start, goal, **meta) -> "ForestWorld":
        return cls(boundary, tuple(build_trees(obstacles)), start, goal, meta)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(t.root for t in self.trees)

    @property
    def root_labels(self) -> tuple[int, ...]:
        return tuple(t.labels[t.root] for t in self.trees)

    def obstacles(self) -> list[Squircle]:
        return [s for t in self.trees for s in t.nodes]

    def root_centers(self) -> np.ndarray:
        return np.array([t.root_squircle.center for t in self.trees]).reshape(-1, 2)

    def clearance(self, points) -> np.ndarray:
        """Minimum implicit-function margin over all obstacles and the boundary.

        Positive means free space; the boundary term is ``-beta_boundary``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        values = [-squircle_beta(self.boundary, pts)]
        values += [squircle_beta(s, pts) for s in self.obstacles()]
        return np.min(np.vstack(values), axis=0)

    def is_free(self, points) -> np.ndarray:
        return self.clearance(points) > 0.0

    def validate(self) -> None:
        for tree in self.trees:
            tree.validate()
        for a, b in itertools.combinations(self.trees, 2):
            for sa in a.nodes:
                for sb in b.nodes:
                    if detect_overlap(sa, sb):
                        raise InvalidForest("obstacles of different trees overlap")
        for s in self.obstacles():
            if np.any(squircle_beta(self.boundary, s.boundary_points()) >= 0.0):
                raise InvalidForest("obstacle not strictly inside the workspace boundary")
        for name, point in (("start", self.start), ("goal", self.goal)):
            if self.clearance(point)[0] <= 0.0:
                raise InvalidForest(f"{name} {point} is not in free space")

    def with_roots(self, roots: Sequence[int]) -> "ForestWorld":
        if len(roots) != len(self.trees):
            raise ValueError("one root per tree required")
        return replace(self, trees=tuple(reroot(t, r) for t, r in zip(self.trees, roots)))


def enumerate_forests(world: ForestWorld) -> list[ForestWorld]:
    """Every choice of roots, in lexicographic order of the root indices."""
    choices = itertools.product(*(range(len(t.nodes)) for t in world.trees))
    return [world.with_roots(roots) for roots in choices]
