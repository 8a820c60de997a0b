import math

import numpy as np
import pytest

from flightdiff.difficulty import angle_over_length, turning_angles
from flightdiff.errors import DensityInfeasible, InfeasibleMaze, InvalidParameter, Unreachable
from flightdiff.geometry import GuidePath, build_scene, nearest_distances, sample_path
from flightdiff.scenegen import (
    ForestSpec,
    MazeSpec,
    compute_guide_path,
    generate_forest,
    generate_maze,
    segment_is_free,
    shortcut,
)

S_GRID = (
    ".....",
    "####.",
    ".....",
)


def test_forest_count_rule():
    spec = ForestSpec(area=(10, 10), tree_density=0.05, seed=1)
    assert spec.tree_count == 5
    assert len(generate_forest(spec).meta["trees"]) == 5


def test_forest_placement_rules():
    spec = ForestSpec(tree_density=0.2, seed=4)
    g = generate_forest(spec)
    trees = np.array(g.meta["trees"])
    xy, r = trees[:, :2], trees[:, 2]
    assert np.all((r >= 0.15) & (r <= 0.3))
    sep = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(axis=2))
    np.fill_diagonal(sep, np.inf)
    assert sep.min() >= 2 * 0.3
    for p in (g.start, g.goal):
        assert np.all(np.hypot(*(xy - p[:2]).T) >= 1.0 + r)
    # all surface points lie on the trunk walls
    pts = g.scene.points
    d = np.sqrt(((pts[:, None, :2] - xy[None]) ** 2).sum(axis=2)) - r[None]
    assert np.abs(d).min(axis=1).max() < 1e-9
    assert pts[:, 2].min() >= 0 and pts[:, 2].max() <= spec.height + 1e-12


def test_forest_deterministic():
    a = generate_forest(ForestSpec(seed=11))
    b = generate_forest(ForestSpec(seed=11))
    c = generate_forest(ForestSpec(seed=12))
    np.testing.assert_array_equal(a.scene.points, b.scene.points)
    assert not np.array_equal(a.meta["trees"], c.meta["trees"])


def test_forest_infeasible_density():
    with pytest.raises(DensityInfeasible):
        generate_forest(ForestSpec(area=(5, 5), tree_density=3.0, trunk_radius_range=(0.3, 0.3)))


def test_forest_spec_validation():
    with pytest.raises(InvalidParameter):
        ForestSpec(area=(1, 1), tree_density=0.5)
    with pytest.raises(InvalidParameter):
        ForestSpec(trunk_radius_range=(0.3, 0.1))


def test_maze_all_free_only_boundary():
    spec = MazeSpec(grid=("....", "....", "...."), cell_size=2.0)
    pts = generate_maze(spec).scene.points
    W, H = 8.0, 6.0
    outside = (pts[:, 0] <= 1e-9) | (pts[:, 0] >= W - 1e-9) | (pts[:, 1] <= 1e-9) | (pts[:, 1] >= H - 1e-9)
    assert outside.all()
    # all four sides are walled
    for mask in (pts[:, 0] <= 0, pts[:, 0] >= W, pts[:, 1] <= 0, pts[:, 1] >= H):
        assert mask.any()


def test_maze_disconnected():
    with pytest.raises(InfeasibleMaze):
        generate_maze(MazeSpec(grid=("..#..",), start_cell=(0, 0), goal_cell=(0, 4)))
    with pytest.raises(InfeasibleMaze):
        generate_maze(MazeSpec(grid=("..#..",)))
    with pytest.raises(InfeasibleMaze):
        MazeSpec(grid=("..#..",), start_cell=(0, 2))


def test_maze_deterministic_and_boxes_keep_connectivity():
    grid = ("......", "......", "......", "......")
    a = generate_maze(MazeSpec(grid=grid, box_fill_fraction=0.4, seed=3))
    b = generate_maze(MazeSpec(grid=grid, box_fill_fraction=0.4, seed=3))
    np.testing.assert_array_equal(a.scene.points, b.scene.points)
    assert a.meta["boxes"] == b.meta["boxes"] and len(a.meta["boxes"]) > 0
    path = compute_guide_path(a.scene, a.start, a.goal, 0.2, 0.25, a.bounds)
    assert path.length > 0


def _positions(path, spacing):
    return np.array([q for q, _ in sample_path(path, spacing)])


def test_maze_single_corridor_corners():
    g = generate_maze(MazeSpec(grid=S_GRID, goal_cell=(2, 0)))
    path = compute_guide_path(g.scene, g.start, g.goal, 0.2, 0.25, g.bounds)
    np.testing.assert_array_equal(path.waypoints[0], g.start)
    np.testing.assert_array_equal(path.waypoints[-1], g.goal)
    # the corridor heads +x, climbs one row, then returns along -x
    d = path.directions
    assert d[0][0] > 0.7 and d[-1][0] < -0.7
    net = math.acos(float(np.clip(d[0] @ d[-1], -1, 1)))
    assert turning_angles(path).sum() >= net - 1e-9
    assert len(path) >= 4
    # and the path actually passes through the connecting cell (row 1, column 4)
    pts = _positions(path, 0.1)
    in_link = (pts[:, 0] > 8) & (pts[:, 0] < 10) & (pts[:, 1] > 2) & (pts[:, 1] < 4)
    assert in_link.any()


def _gap_wall():
    ys = np.arange(-5, 5.001, 0.05)
    ys = ys[np.abs(ys - 2.0) > 0.8]
    return build_scene(np.stack([np.full_like(ys, 5.0), ys, np.zeros_like(ys)], axis=1))


def test_empty_scene_straight():
    path = compute_guide_path(None, (0, 0, 0), (3, 4, 0), 0.2, 0.25)
    assert len(path) == 2 and path.length == 5.0


def test_wall_with_gap():
    scene = _gap_wall()
    bounds = ((-1, -5, 0), (11, 5, 0))
    path = compute_guide_path(scene, (0, 0, 0), (10, 0, 0), 0.2, 0.25, bounds)
    pts = _positions(path, 0.01)
    near_wall = pts[np.abs(pts[:, 0] - 5.0) < 0.01]
    assert np.all(np.abs(near_wall[:, 1] - 2.0) < 0.8)
    assert angle_over_length(path) > 0


def test_blocked_goal():
    scene = build_scene([(10, 0.1, 0)])
    with pytest.raises(Unreachable):
        compute_guide_path(scene, (0, 0, 0), (10, 0, 0), 0.2, 0.25)


def test_fully_walled_goal():
    ys = np.arange(-3, 3.001, 0.05)
    scene = build_scene(np.stack([np.full_like(ys, 5.0), ys, np.zeros_like(ys)], axis=1))
    with pytest.raises(Unreachable):
        compute_guide_path(scene, (0, 0, 0), (10, 0, 0), 0.2, 0.25, ((-1, -3, 0), (11, 3, 0)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_guide_path_clearance(seed):
    g = generate_forest(ForestSpec(tree_density=0.15, seed=seed))
    for margin in (0.0, 0.25):
        path = compute_guide_path(g.scene, g.start, g.goal, 0.2, 0.25, g.bounds, margin=margin)
        pts = _positions(path, 0.1)
        assert nearest_distances(g.scene, pts).min() >= 0.25 - 0.2


def test_segment_is_free_exact():
    scene = build_scene([(5, 0.3, 0)])
    assert not segment_is_free(scene, (0, 0, 0), (10, 0, 0), 0.31, 0.1)
    assert segment_is_free(scene, (0, 0, 0), (10, 0, 0), 0.29, 0.1)
    # obstacle between coarse samples is still seen
    assert not segment_is_free(scene, (0, 0, 0), (10, 0, 0), 0.31, 5.0)


def test_shortcut_never_lengthens(rng):
    scene = build_scene(rng.uniform(-5, 5, (300, 3)))
    for _ in range(10):
        pts = list(np.cumsum(rng.normal(scale=0.5, size=(30, 3)), axis=0))
        out = shortcut(pts, scene, 0.1, 0.05)
        assert GuidePath(out).length <= GuidePath(pts).length + 1e-12
        np.testing.assert_array_equal(out[0], pts[0])
        np.testing.assert_array_equal(out[-1], pts[-1])
