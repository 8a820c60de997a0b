import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flightdiff.errors import EmptyScene, InvalidGeometry, InvalidParameter
from flightdiff.geometry import (
    GuidePath,
    SensorConfig,
    Sphere,
    build_scene,
    default_sector_weights,
    discretize_box,
    discretize_cylinder,
    discretize_sphere,
    nearest_distances,
    nearest_obstacle,
    sample_arc_lengths,
    sample_path,
    sphere_overlap_volume,
)


def brute_nearest(points, q):
    d = np.sqrt(((points - q) ** 2).sum(axis=1))
    k = int(np.argmin(d))
    return k, d[k]


def test_single_point_scene():
    scene = build_scene([(0, 0, 0)])
    assert len(scene) == 1
    for q in [(5, 1, 2), (-3, 0, 0)]:
        p, _ = nearest_obstacle(scene, q)
        assert tuple(p) == (0, 0, 0)


def test_empty_scene_rejected():
    with pytest.raises(EmptyScene):
        build_scene([])


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(InvalidGeometry):
        build_scene([(0, 0, 0), (1, bad, 0)])


def test_point_order_preserved_and_bounds():
    pts = np.array([[3, 2, 1], [0, 0, 0], [-1, 5, 2]], float)
    scene = build_scene(pts)
    np.testing.assert_array_equal(scene.points, pts)
    lo, hi = scene.bounds
    assert np.all(lo <= pts) and np.all(pts <= hi)


def test_nearest_matches_linear_scan(rng):
    pts = rng.uniform(0, 10, size=(1000, 3))
    scene = build_scene(pts)
    for q in rng.uniform(-1, 11, size=(100, 3)):
        p, d = nearest_obstacle(scene, q)
        k, d_ref = brute_nearest(pts, q)
        assert d == d_ref
        np.testing.assert_array_equal(p, pts[k])


def test_nearest_distances_batch_matches_single(rng):
    pts = rng.uniform(0, 5, size=(300, 3))
    scene = build_scene(pts)
    qs = rng.uniform(0, 5, size=(50, 3))
    batch = nearest_distances(scene, qs)
    single = [nearest_obstacle(scene, q)[1] for q in qs]
    np.testing.assert_array_equal(batch, single)


def test_query_at_obstacle_is_zero():
    scene = build_scene([(1, 2, 3), (4, 5, 6)])
    assert nearest_obstacle(scene, (4, 5, 6))[1] == 0.0


def test_scalar_example():
    p, d = nearest_obstacle(build_scene([(1, 0, 0)]), (0, 0, 0))
    assert tuple(p) == (1, 0, 0) and d == 1.0


def test_ties_break_to_lowest_index():
    pts = [(2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0), (-2, 0, 0)]
    p, d = nearest_obstacle(build_scene(pts), (0, 0, 0))
    assert d == 2.0
    assert tuple(p) == (2, 0, 0)
    pts = [(0, 5, 0), (0, -1, 0), (1, 0, 0), (0, 0, 1)]
    p, _ = nearest_obstacle(build_scene(pts), (0, 0, 0))
    assert tuple(p) == (0, -1, 0)


def test_free_space_query():
    p, d = nearest_obstacle(None, (1, 2, 3))
    assert p is None and d == math.inf


# -- guide path sampling ------------------------------------------------------


def test_straight_path_samples():
    samples = sample_path(GuidePath([(0, 0, 0), (10, 0, 0)]), 1.0)
    assert len(samples) == 11
    for k, (pos, tan) in enumerate(samples):
        np.testing.assert_allclose(pos, (k, 0, 0), atol=1e-12)
        np.testing.assert_array_equal(tan, (1, 0, 0))


def test_spacing_longer_than_path():
    samples = sample_path(GuidePath([(0, 0, 0), (3, 4, 0)]), 7.0)
    assert len(samples) == 2
    np.testing.assert_array_equal(samples[0][0], (0, 0, 0))
    np.testing.assert_array_equal(samples[1][0], (3, 4, 0))


@pytest.mark.parametrize("spacing", [0.0, -1.0, math.nan])
def test_bad_spacing(spacing):
    with pytest.raises(InvalidParameter):
        sample_path(GuidePath([(0, 0, 0), (1, 0, 0)]), spacing)


def _walk(waypoints, s):
    """Independent arc-length interpolation: walk segment by segment."""
    remaining = s
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        seg = math.dist(a, b)
        if remaining < seg:
            return a + (b - a) * (remaining / seg), (b - a) / seg
        remaining -= seg
    a, b = np.asarray(waypoints[-2], float), np.asarray(waypoints[-1], float)
    return b, (b - a) / math.dist(a, b)


def test_l_shaped_path_against_interpolation():
    wp = [(0, 0, 0), (1, 0, 0), (1, 1, 0)]
    samples = sample_path(GuidePath(wp), 0.25)
    assert len(samples) == 9
    for k, (pos, tan) in enumerate(samples):
        ref_pos, ref_tan = _walk(wp, 0.25 * k)
        np.testing.assert_allclose(pos, ref_pos, atol=1e-12)
        np.testing.assert_allclose(tan, ref_tan, atol=1e-12)
    # the waypoint at the corner takes the outgoing direction
    np.testing.assert_array_equal(samples[3][1], (1, 0, 0))
    np.testing.assert_array_equal(samples[4][1], (0, 1, 0))


def test_guide_path_validation():
    with pytest.raises(InvalidGeometry):
        GuidePath([(0, 0, 0)])
    with pytest.raises(InvalidGeometry):
        GuidePath([(0, 0, 0), (0, 0, 0), (1, 0, 0)])
    path = GuidePath([(0, 0, 0), (3, 4, 0), (3, 4, 2)])
    np.testing.assert_allclose(path.cumulative_lengths, [0, 5, 7])
    assert path.length == 7


waypoint_lists = st.lists(
    st.tuples(*[st.floats(-50, 50, allow_nan=False)] * 3), min_size=2, max_size=6
).filter(lambda w: all(math.dist(a, b) > 1e-3 for a, b in zip(w[:-1], w[1:])))


@settings(max_examples=60, deadline=None)
@given(waypoint_lists, st.floats(0.05, 20))
def test_sample_gaps_property(wp, spacing):
    path = GuidePath(wp)
    samples = sample_path(path, spacing)
    s = sample_arc_lengths(path.length, spacing)
    assert s[0] == 0 and s[-1] == path.length
    gaps = np.diff(s)
    np.testing.assert_allclose(gaps[:-1], spacing, rtol=1e-9, atol=1e-9)
    assert 0 < gaps[-1] <= spacing * (1 + 1e-9)
    for _, tan in samples:
        assert abs(np.linalg.norm(tan) - 1) <= 1e-9
    assert len(samples) == len(s)


# -- spheres --------------------------------------------------------------------


def test_identical_spheres():
    a = Sphere((0, 0, 0), 1.0)
    assert sphere_overlap_volume(a, Sphere((0, 0, 0), 1.0)) == pytest.approx(4 / 3 * math.pi, abs=1e-12)
    assert 4 / 3 * math.pi == pytest.approx(4.18879, abs=1e-5)


def test_disjoint_spheres():
    assert sphere_overlap_volume(Sphere((0, 0, 0), 1), Sphere((3, 0, 0), 1)) == 0.0
    assert sphere_overlap_volume(Sphere((0, 0, 0), 1), Sphere((2, 0, 0), 1)) == 0.0


def test_contained_sphere():
    big, small = Sphere((0, 0, 0), 3), Sphere((0.5, 0, 0), 1)
    assert sphere_overlap_volume(big, small) == pytest.approx(small.volume)


def monte_carlo_overlap(a, b, n, rng):
    lo = np.maximum(a.center - a.radius, b.center - b.radius)
    hi = np.minimum(a.center + a.radius, b.center + b.radius)
    if np.any(hi <= lo):
        return 0.0
    pts = rng.uniform(lo, hi, size=(n, 3))
    inside = (np.linalg.norm(pts - a.center, axis=1) <= a.radius) & (
        np.linalg.norm(pts - b.center, axis=1) <= b.radius
    )
    return float(np.prod(hi - lo) * inside.mean())


def test_lens_volume_against_monte_carlo(rng):
    a, b = Sphere((0, 0, 0), 1), Sphere((1, 0, 0), 1)
    exact = sphere_overlap_volume(a, b)
    assert exact == pytest.approx(5 * math.pi / 12, rel=1e-12)
    assert monte_carlo_overlap(a, b, 10**6, rng) == pytest.approx(exact, rel=0.01)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0, 12), st.floats(0, 3),
)
def test_overlap_symmetric_and_monotone(r1, r2, d, extra):
    a = Sphere((0, 0, 0), r1)
    b1 = Sphere((d, 0, 0), r2)
    b2 = Sphere((d + extra, 0, 0), r2)
    v1 = sphere_overlap_volume(a, b1)
    assert v1 == pytest.approx(sphere_overlap_volume(b1, a), rel=1e-12, abs=1e-15)
    assert sphere_overlap_volume(a, b2) <= v1 * (1 + 1e-12) + 1e-15
    assert 0 <= v1 <= min(a.volume, b1.volume) * (1 + 1e-12)


def test_negative_radius_rejected():
    with pytest.raises(InvalidGeometry):
        Sphere((0, 0, 0), -0.1)


# -- sensor ---------------------------------------------------------------------


def test_default_weights_peak_in_centre():
    w = default_sector_weights(9)
    assert sum(w) == pytest.approx(1, abs=1e-12)
    assert w == tuple(reversed(w))
    assert max(w) == w[4]
    assert all(w[k] < w[k + 1] for k in range(4))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sensing_range": 0},
        {"drone_radius": -1},
        {"fov_horizontal": 0},
        {"fov_vertical": 4.0},
        {"fov_sectors": 0},
        {"fov_sectors": 2, "sector_weights": (0.6, 0.6)},
        {"fov_sectors": 2, "sector_weights": (1.5, -0.5)},
    ],
)
def test_sensor_validation(kwargs):
    with pytest.raises(InvalidParameter):
        SensorConfig(**kwargs)


# -- discretisation -------------------------------------------------------------


def test_discretized_surfaces_lie_on_primitives():
    sph = discretize_sphere((1, 2, 3), 0.5)
    np.testing.assert_allclose(np.linalg.norm(sph - (1, 2, 3), axis=1), 0.5, atol=1e-12)
    cyl = discretize_cylinder((0, 0, 0), 0.3, 2.0, caps=False)
    np.testing.assert_allclose(np.hypot(cyl[:, 0], cyl[:, 1]), 0.3, atol=1e-12)
    assert cyl[:, 2].min() == 0 and cyl[:, 2].max() == 2.0
    box = discretize_box((0, 0, 0), (1, 2, 3))
    on_face = np.isclose(box, 0).any(axis=1) | np.isclose(box, (1, 2, 3)).any(axis=1)
    assert on_face.all()


def test_discretization_density():
    # a 10 m^2 face at 20 pts/m^2 carries at least 200 points
    face = discretize_box((0, 0, 0), (2, 5, 1), 20.0, faces=("z+",))
    assert len(face) >= 200


def test_geometry_ops_are_pure(rng):
    pts = rng.uniform(0, 3, (200, 3))
    q = rng.uniform(0, 3, 3)
    r1 = nearest_obstacle(build_scene(pts), q)
    r2 = nearest_obstacle(build_scene(pts.copy()), q)
    assert r1[1] == r2[1] and np.array_equal(r1[0], r2[0])
    path = GuidePath([(0, 0, 0), (1, 2, 0), (4, 2, 1)])
    s1, s2 = sample_path(path, 0.3), sample_path(path, 0.3)
    assert all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) for a, b in zip(s1, s2))
