"""Sign vectors, D-signatures and H-signatures of point-world paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import EndpointMismatch, MarkerOnPath, ObstacleOnLoop
from .paths import PathPolyline
from .transform import PointWorld

LOOP_TOL = 1e-9
MARKER_TOL = 1e-9
CIRCLE_INFLATION = 1.2
ARC_SAMPLES = 512
ENDPOINT_TOL = 1e-6


@dataclass(frozen=True)
class DSignature:
    signs: tuple[int, ...]
    distances: tuple[float, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        distances = tuple(float(d) for d in self.distances)
        if len(signs) != len(distances) or any(d < 0 for d in distances):
            raise ValueError("need one nonnegative distance per sign")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "distances", distances)

    @classmethod
    def from_signed(cls, signed) -> "DSignature":
        signed = np.asarray(signed, dtype=float)
        return cls(tuple(np.where(signed < 0, -1, 1)), tuple(np.abs(signed)))

    @property
    def signed(self) -> np.ndarray:
        return np.array(self.signs, dtype=float) * np.array(self.distances)

    def __len__(self):
        return len(self.signs)


@dataclass(frozen=True)
class EnclosingCircle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True, eq=False)
class HSignature:
    components: np.ndarray

    def windings(self) -> np.ndarray:
        return self.components.imag / (2.0 * np.pi)


def enclosing_circle(world: PointWorld, *paths: PathPolyline) -> EnclosingCircle:
    """Circle about the start-goal midpoint covering obstacles, endpoints and all path samples."""
    center = 0.5 * (world.start_array + world.goal_array)
    pts = np.vstack([world.points_array, world.start_array, world.goal_array] + [p.samples for p in paths])
    return EnclosingCircle(tuple(center), CIRCLE_INFLATION * float(np.max(np.linalg.norm(pts - center, axis=1))))


def _check_endpoints(world: PointWorld, path: PathPolyline) -> None:
    scale = 1.0 + float(np.linalg.norm(world.goal_array - world.start_array))
    if (np.linalg.norm(path.start - world.start_array) > ENDPOINT_TOL * scale
            or np.linalg.norm(path.end - world.goal_array) > ENDPOINT_TOL * scale):
        raise EndpointMismatch("path endpoints differ from the world's start and goal")


def closing_loop(world: PointWorld, path: PathPolyline, circle: EnclosingCircle) -> np.ndarray:
    """Path, then the counterclockwise half circle from beyond the goal to beyond the start."""
    c = np.asarray(circle.center)
    u = world.goal_array - c
    u /= np.linalg.norm(u)
    a0 = np.arctan2(u[1], u[0])
    arc = a0 + np.linspace(0.0, np.pi, ARC_SAMPLES)
    arc_pts = c + circle.radius * np.column_stack([np.cos(arc), np.sin(arc)])
    # the closing segment back to the start is implied by the polygon wrap-around
    return np.ascontiguousarray(np.vstack([path.samples, arc_pts]))


def sign_vector(world: PointWorld, path: PathPolyline, circle: EnclosingCircle | None = None) -> tuple[int, ...]:
    """+1 for obstacles enclosed by the anticlockwise closing loop, -1 otherwise."""
    if world.n_obstacles == 0:
        return ()
    _check_endpoints(world, path)
    circle = enclosing_circle(world, path) if circle is None else circle
    loop = closing_loop(world, path, circle)
    pts = np.ascontiguousarray(world.points_array)
    closed = np.vstack([loop, loop[:1]])
    if np.min(K.min_segment_distances(closed, pts)) < LOOP_TOL:
        raise ObstacleOnLoop("an obstacle lies on the closing loop")
    wind = K.winding_numbers(loop, pts)
    return tuple(1 if abs(v) > 0.5 else -1 for v in wind)


def path_distances(world: PointWorld, path: PathPolyline) -> np.ndarray:
    if world.n_obstacles == 0:
        return np.zeros(0)
    return K.min_segment_distances(np.ascontiguousarray(path.samples), np.ascontiguousarray(world.points_array))


def d_signature(world: PointWorld, path: PathPolyline, circle: EnclosingCircle | None = None) -> DSignature:
    return DSignature(sign_vector(world, path, circle), tuple(path_distances(world, path)))


def h_signature_markers(path: PathPolyline, markers) -> HSignature:
    """Sum of principal logs of ``(z_{k+1} - m) / (z_k - m)``; exact for straight segments."""
    markers = np.atleast_2d(np.asarray(markers, dtype=float)).reshape(-1, 2)
    if len(markers) == 0:
        return HSignature(np.zeros(0, dtype=complex))
    if np.min(K.min_segment_distances(np.ascontiguousarray(path.samples), np.ascontiguousarray(markers))) < MARKER_TOL:
        raise MarkerOnPath("path passes through an obstacle marker")
    z = path.samples[:, 0] + 1j * path.samples[:, 1]
    zeta = markers[:, 0] + 1j * markers[:, 1]
    ratio = (z[None, 1:] - zeta[:, None]) / (z[None, :-1] - zeta[:, None])
    return HSignature(np.sum(np.log(ratio), axis=1))


def h_signature(world: PointWorld, path: PathPolyline) -> HSignature:
    return h_signature_markers(path, world.points_array)


def homologous(world: PointWorld, path_a: PathPolyline, path_b: PathPolyline) -> bool:
    """Whether the two paths have equal sign vectors (equivalently equal H-signatures)."""
    if np.linalg.norm(path_a.start - path_b.start) > LOOP_TOL or np.linalg.norm(path_a.end - path_b.end) > LOOP_TOL:
        raise EndpointMismatch("paths do not share endpoints")
    circle = enclosing_circle(world, path_a, path_b)
    return sign_vector(world, path_a, circle) == sign_vector(world, path_b, circle)


def h_difference(world: PointWorld, path_a: PathPolyline, path_b: PathPolyline) -> float:
    return float(np.max(np.abs(h_signature(world, path_a).components - h_signature(world, path_b).components),
                        initial=0.0))


def signs_from_index(k: int, m: int) -> tuple[int, ...]:
    """Sign vector number ``k``: entry ``i`` is +1 iff bit ``i`` of ``k`` is 0."""
    return tuple(-1 if (k >> i) & 1 else 1 for i in range(m))


def _segment_distance(p, a, b) -> float:
    return float(K.min_segment_distances(np.array([a, b], dtype=float), np.atleast_2d(np.asarray(p, dtype=float)))[0])


def candidate_distances(world: PointWorld, signs) -> tuple[float, ...]:
    """Distance to the nearest opposite-signed obstacle, or to the start-goal segment if none."""
    pts = world.points_array
    signs = np.asarray(signs)
    out = []
    for i, s in enumerate(signs):
        opposite = pts[signs != s]
        if len(opposite):
            out.append(float(np.min(np.linalg.norm(opposite - pts[i], axis=1))))
        else:
            out.append(_segment_distance(pts[i], world.start, world.goal))
    return tuple(out)


def candidate_signatures(world: PointWorld) -> list[DSignature]:
    """All ``2^M`` target signatures in binary-counter order."""
    m = world.n_obstacles
    return [DSignature(signs, candidate_distances(world, signs))
            for signs in (signs_from_index(k, m) for k in range(2 ** m))]
