import numpy as np
import pytest

from homotopy_nav.errors import OutsideFreeSpace
from homotopy_nav.geometry import ForestWorld, enumerate_forests, squircle_beta
from homotopy_nav.paths import PathPolyline
from homotopy_nav.transform import (build_chain, bounding_sphere, map_jacobian, map_jacobians, map_path,
                                    map_point, map_points, point_world, psi, psi_jacobian, root_points)
from homotopy_nav.worlds import disc, room, three_tree_world


@pytest.fixture(scope="module")
def world():
    return three_tree_world()


@pytest.fixture(scope="module")
def chains(world):
    return [build_chain(f) for f in enumerate_forests(world)]


def free_samples(world, n, rng, clearance=1e-3):
    b = world.boundary
    r = b.circumradius()
    pts = []
    while len(pts) < n:
        p = b.center_array + rng.uniform(-r, r, (4 * n, 2))
        pts.extend(p[world.clearance(p) > clearance])
    return np.array(pts[:n])


def test_root_centers_are_fixed_points(chains):
    for chain in chains:
        centers = chain.forest.root_centers()
        inner = chain.evaluate(centers, psi_on=False)
        assert np.max(np.abs(inner - centers)) < 1e-9
        q0, rho0 = chain.sphere_center, chain.sphere_radius
        assert np.allclose(chain.evaluate(centers), psi(centers, q0, rho0), atol=1e-9)
        assert np.allclose(point_world(chain).points_array, root_points(chain.forest), atol=1e-9)


def test_goal_is_fixed(chains):
    for chain in chains:
        goal = np.array(chain.forest.goal)
        assert np.max(np.abs(chain.evaluate(goal, psi_on=False)[0] - goal)) < 1e-9


def test_leaf_boundary_collapses_onto_parent(chains):
    for chain in chains:
        for k, stage in enumerate(chain.stages[:chain.n_purge]):
            _, ti, label = stage.name.split(":")
            tree = chain.forest.trees[int(ti)]
            leaf = tree.nodes[tree.labels.index(int(label))]
            pts = leaf.boundary_points(64)
            pts = pts[squircle_beta(stage.guard, pts) >= 0.0]
            image = chain.evaluate(pts, k, k + 1, psi_on=False)
            assert np.max(np.abs(squircle_beta(stage.guard, image))) < 1e-6


def test_circles_need_no_purge_and_stay_circles():
    circles = ForestWorld.from_obstacles(room(), [disc(c, 1.0, 1e-6) for c in [(3, 3), (6, 4), (4, 7)]],
                                         (1.5, 8.5), (8.5, 1.5))
    chain = build_chain(circles)
    assert chain.n_purge == 0
    rng = np.random.default_rng(0)
    pts = free_samples(circles, 200, rng)
    stars = chain.evaluate(pts, chain.n_purge + 1, chain.n_purge + chain.n_star, psi_on=False)
    assert np.max(np.abs(stars - pts)) < 1e-6


def test_empty_world_is_psi_away_from_the_wall():
    w = ForestWorld.from_obstacles(room(), [], (2.0, 2.0), (8.0, 8.0))
    chain = build_chain(w, sphere_inflation=1.05)
    q0, rho0 = bounding_sphere(w.boundary, 1.05)
    assert np.allclose(map_point(chain, q0), q0)
    p = np.array(q0) + np.array([rho0 / 2, 0.0])
    assert w.clearance(p)[0] > 0
    assert np.linalg.norm(map_point(chain, p) - q0) == pytest.approx(rho0)
    assert np.allclose(map_jacobian(chain, q0), np.eye(2), atol=1e-6)
    rng = np.random.default_rng(1)
    pts = np.array(q0) + rng.uniform(-3, 3, (50, 2))
    assert np.allclose(map_points(chain, pts), psi(pts, q0, rho0), atol=1e-12)
    for q in pts[:10]:
        assert np.allclose(map_jacobian(chain, q), psi_jacobian(q, q0, rho0), atol=1e-6)


def test_psi_closed_form():
    q0, rho0 = (1.0, 2.0), 4.0
    p = np.array([1.0 + 2.0, 2.0])
    assert np.allclose(psi(p, q0, rho0), [1.0 + 4.0, 2.0])
    eps = 1e-6
    fd = np.column_stack([(psi(p + eps * e, q0, rho0) - psi(p - eps * e, q0, rho0)) / (2 * eps)
                          for e in np.eye(2)])
    assert np.allclose(psi_jacobian(p, q0, rho0), fd, atol=1e-6)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_orientation_preserving_and_fixed_points(world, lam):
    chain = build_chain(world, switch_sharpness=lam)
    centers = world.root_centers()
    assert np.max(np.abs(chain.evaluate(centers, psi_on=False) - centers)) < 1e-9
    pts = free_samples(world, 500, np.random.default_rng(2))
    det = np.linalg.det(map_jacobians(chain, pts))
    assert np.all(det > 0)


def test_injective_on_samples(chains):
    rng = np.random.default_rng(4)
    world = chains[0].forest
    a, b = free_samples(world, 2000, rng), free_samples(world, 2000, rng)
    keep = np.linalg.norm(a - b, axis=1) > 0
    fa, fb = map_points(chains[0], a[keep]), map_points(chains[0], b[keep])
    assert np.min(np.linalg.norm(fa - fb, axis=1)) > 0


def test_outside_free_space_is_rejected(world):
    chain = build_chain(world)
    inside = world.trees[0].nodes[0].center
    with pytest.raises(OutsideFreeSpace):
        map_point(chain, inside)
    path = PathPolyline.from_samples([world.start, inside, world.goal], True, "forest")
    with pytest.raises(OutsideFreeSpace) as err:
        map_path(chain, path)
    assert err.value.index == 1


def test_map_path_keeps_samples_and_times(world):
    chain = build_chain(world)
    samples = np.linspace(world.start, (1.5, 8.5), 30)
    path = PathPolyline.from_samples(samples, True, "forest")
    image = map_path(chain, path)
    assert len(image) == len(path)
    assert np.array_equal(image.times, path.times)
    assert np.allclose(image.samples, map_points(chain, samples))
    goal = PathPolyline(np.tile(world.goal, (3, 1)), np.arange(3.0), True, "forest")
    assert np.allclose(map_path(chain, goal).samples, map_point(chain, world.goal))
