"""Polyhedra, projections, cones, and weighted dual-norm distances."""

import math

import numpy as np
import pytest

from regulab import (
    EmptySetError,
    GammaMetric,
    GridSpec,
    PointCloud,
    Polyhedron,
    PolyUnion,
    cone_min_norm,
    dist_to_region,
    gamma_dual_distance,
    intersect_cones,
    norm_subdifferential,
    normal_cone_at,
    project_polyhedron,
)
from regulab.sets import ConeRep, Sampler, cone_rays_from_halfspaces
from regulab.spaces import make_grid


def unit_box(n):
    A = np.vstack([np.eye(n), -np.eye(n)])
    return Polyhedron(A, np.ones(2 * n))


# ---------------------------------------------------------------------------
# distances and projections


def test_dist_membership_zero():
    S = PolyUnion([unit_box(2)])
    d, near = dist_to_region([0.0, 0.0], S)
    assert d == 0.0
    assert np.allclose(near, [0.0, 0.0])


def test_dist_to_empty_is_inf():
    d, near = dist_to_region([1.0], PointCloud(np.zeros((0, 1))))
    assert math.isinf(d) and near is None
    empty_poly = Polyhedron([[1.0], [-1.0]], [-1.0, -1.0])  # x<=-1 and x>=1
    assert empty_poly.is_empty()
    d, near = dist_to_region([0.0], PolyUnion([empty_poly]))
    assert math.isinf(d) and near is None


def test_dist_unit_box_side():
    d, near = dist_to_region([2.0, 0.0], PolyUnion([unit_box(2)]))
    assert abs(d - 1.0) < 1e-9
    assert np.allclose(near, [1.0, 0.0], atol=1e-9)
    # brute-force grid check
    grid = make_grid(GridSpec((-1.0, -1.0), (1.0, 1.0), 101))
    dg = np.min(np.linalg.norm(grid - np.array([2.0, 0.0]), axis=1))
    assert d <= dg + 1e-9


def test_projection_fixed_point_and_halfplane():
    Q = Polyhedron([[0.0, 1.0]], [1.0])
    assert np.allclose(project_polyhedron([0.3, 0.2], Q), [0.3, 0.2])
    assert np.allclose(project_polyhedron([0.0, 2.0], Q), [0.0, 1.0])


def test_projection_matches_grid_oracle_in_3d():
    rng = np.random.default_rng(3)
    Q = unit_box(3)
    for _ in range(5):
        x = rng.uniform(-2, 2, size=3)
        q = project_polyhedron(x, Q)
        assert Q.contains(q, 1e-8)
        grid = make_grid(GridSpec((-1,) * 3, (1,) * 3, 21))
        dg = np.min(np.linalg.norm(grid - x, axis=1))
        assert np.linalg.norm(q - x) <= dg + 1e-9
        # idempotence
        assert np.allclose(project_polyhedron(q, Q), q, atol=1e-9)


def test_projection_variational_inequality():
    rng = np.random.default_rng(5)
    Q = unit_box(2)
    verts = Q.vertices()
    assert verts.shape[0] == 4
    for _ in range(10):
        x = rng.uniform(-3, 3, size=2)
        q = project_polyhedron(x, Q)
        for z in verts:
            assert (x - q) @ (z - q) <= 1e-7


def test_projection_onto_empty_raises():
    with pytest.raises(EmptySetError):
        project_polyhedron([0.0], Polyhedron([[1.0], [-1.0]], [-1.0, -1.0]))


def test_sampler_region_materializes():
    s = Sampler(lambda p: p[0] >= 0, GridSpec((-1.0,), (1.0,), 5))
    d, near = dist_to_region([-0.6], s)
    assert abs(d - 0.6) < 1e-12
    assert near[0] == 0.0


# ---------------------------------------------------------------------------
# norm subdifferential


def test_norm_subdifferential():
    assert norm_subdifferential([1.0], [1.0]) == "unit-ball"
    assert np.allclose(norm_subdifferential([3.0, 4.0], [0.0, 0.0]), [0.6, 0.8])
    assert np.allclose(norm_subdifferential([-2.0], [0.0]), [-1.0])


# ---------------------------------------------------------------------------
# cones


def test_normal_cone_single_face():
    S = Polyhedron([[0.0, 1.0]], [1.0])
    cone = normal_cone_at(S, [0.0, 1.0])
    assert cone.generators.shape[0] == 1
    g = cone.generators[0] / np.linalg.norm(cone.generators[0])
    assert np.allclose(g, [0.0, 1.0])
    assert cone.contains([0.0, 2.5])
    assert not cone.contains([0.1, 1.0])


def test_normal_cone_outside_point_is_empty():
    S = Polyhedron([[0.0, 1.0]], [1.0])
    cone = normal_cone_at(S, [0.0, 2.0])
    assert cone.empty
    assert math.isinf(cone.euclidean_distance([0.0, 1.0]))


def test_normal_cone_interior_point_is_zero_cone():
    cone = normal_cone_at(unit_box(2), [0.0, 0.0])
    assert cone.is_trivial()
    assert cone.euclidean_distance([0.3, 0.4]) == 0.5


def test_cone_polarity_generators_vs_vertices():
    Q = unit_box(2)
    x = np.array([1.0, 0.3])
    cone = normal_cone_at(Q, x)
    for g in cone.generators:
        for z in Q.vertices():
            assert g @ (z - x) <= 1e-7


def test_union_cone_is_intersection():
    # two halfplanes meeting along the x-axis boundary point at the origin
    S1 = Polyhedron([[1.0, 1.0]], [0.0])   # x + y <= 0
    S2 = Polyhedron([[1.0, -1.0]], [0.0])  # x - y <= 0
    S = PolyUnion([S1, S2])
    x = np.array([0.0, 0.0])
    cone = normal_cone_at(S, x)
    c1, c2 = normal_cone_at(S1, x), normal_cone_at(S2, x)
    for v in cone.generators:
        assert c1.euclidean_distance(v) <= 1e-9
        assert c2.euclidean_distance(v) <= 1e-9
    # limiting pairing test: generators pair nonpositively into both pieces
    rng = np.random.default_rng(0)
    for v in cone.generators:
        for _ in range(50):
            z = rng.uniform(-1, 1, size=2)
            if S.contains(z):
                assert v @ (z - x) <= 1e-7 * (1 + np.linalg.norm(v))


def test_intersect_cones_halfline():
    c1 = ConeRep.make(generators=[[1.0, 0.0], [0.0, 1.0]])
    c2 = ConeRep.make(generators=[[1.0, 0.0], [0.0, -1.0]])
    inter = intersect_cones(c1, c2)
    assert inter.contains([2.0, 0.0])
    assert not inter.contains([0.0, 1.0])
    assert not inter.contains([0.0, -1.0])


def test_cone_rays_from_halfspaces_quadrant():
    cone = cone_rays_from_halfspaces(np.array([[-1.0, 0.0], [0.0, -1.0]]), 2)
    assert cone.lineality.shape[0] == 0
    dirs = sorted(tuple(np.round(g, 9)) for g in cone.generators)
    assert dirs == [(0.0, 1.0), (1.0, 0.0)]


def test_cone_membership_distance_consistency():
    cone = ConeRep.make(generators=[[1.0, 1.0]], lineality=[[1.0, -1.0]])
    assert cone.contains([3.0, 1.0])  # (2,2) + (1,-1)
    assert cone.euclidean_distance([3.0, 1.0]) <= 1e-9
    assert cone.euclidean_distance([-1.0, -1.0]) > 1e-3


# ---------------------------------------------------------------------------
# weighted dual-norm distance to cones


def test_dual_distance_to_diagonal_line():
    cone = ConeRep.make(lineality=[[1.0, 1.0]])
    q = np.array([0.0, -1.0])
    for gamma, expect in [(0.25, 1.0), (0.5, 1.0), (1.0, 1.0), (2.0, 0.5),
                          (4.0, 0.25)]:
        v = gamma_dual_distance(q, cone, GammaMetric(gamma), 1)
        assert abs(v - expect) < 1e-9


def test_dual_distance_to_slanted_line():
    # line spanned by (2x, -1): distance of (0,-1) is min(2|x|, 1/gamma)
    for xv in (0.01, 0.05, 0.2, 0.45):
        cone = ConeRep.make(lineality=[[2 * xv, -1.0]])
        v = gamma_dual_distance(np.array([0.0, -1.0]), cone, GammaMetric(1.0), 1)
        assert abs(v - min(2 * xv, 1.0)) < 1e-9


def test_dual_distance_membership_zero_and_empty_inf():
    cone = ConeRep.make(generators=[[1.0, 0.0]])
    assert gamma_dual_distance([2.0, 0.0], cone, GammaMetric(1.0), 1) == 0.0
    assert math.isinf(
        gamma_dual_distance([1.0, 0.0], ConeRep.empty_cone(2), GammaMetric(1.0), 1))


def test_dual_distance_2d_matches_dense_search():
    # 2-D X, 1-D Y: distance from (0,0,-1) to the plane normal cone of the
    # graph of y = a.x, checked against dense sampling of the cone
    a = np.array([0.8, -0.5])
    lin = np.array([[a[0], 0.0, -1.0], [0.0, a[1], -1.0]])
    # graph of y = a.x has normal space spanned by (a, -1): single line
    cone = ConeRep.make(lineality=[[a[0], a[1], -1.0]])
    g = GammaMetric(1.3)
    v = gamma_dual_distance(np.array([0.0, 0.0, -1.0]), cone, g, 2)
    # dense oracle over the line parameter
    ts = np.linspace(-5, 5, 200001)
    dists = (np.abs(ts) * np.linalg.norm(a)
             + np.abs(-1.0 + ts) / g.gamma)
    assert abs(v - dists.min()) < 1e-6


def test_cone_min_norm_diagonal():
    # cone {(t, t)}: elements with y-part in B_eta(-1) have |x| >= 1 - eta
    cone = ConeRep.make(lineality=[[1.0, 1.0]])
    v = cone_min_norm(cone, 1, np.array([-1.0]), 0.5)
    assert abs(v - 0.5) < 1e-9


def test_cone_min_norm_slanted_and_vacuous():
    cone = ConeRep.make(lineality=[[2 * 0.1, -1.0]])
    # elements lam*(0.2, -1): y-part -lam in B_eta(-1) -> lam in [1-eta,1+eta]
    v = cone_min_norm(cone, 1, np.array([-1.0]), 0.25)
    assert abs(v - 0.2 * 0.75) < 1e-9
    # generator-only cone pointing the wrong way: ball unreachable
    away = ConeRep.make(generators=[[1.0, 1.0]])
    assert math.isinf(cone_min_norm(away, 1, np.array([-5.0]), 0.5))
