"""Procedural Forest and Maze scenes and voxel-grid guide paths."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DensityInfeasible, InfeasibleMaze, InvalidParameter, Unreachable
from .geometry import (
    DEFAULT_SURFACE_DENSITY,
    GuidePath,
    ObstacleScene,
    as_point,
    build_scene,
    discretize_box,
    discretize_cylinder,
    nearest_distances,
)


@dataclass
class GeneratedScene:
    scene: ObstacleScene
    start: np.ndarray
    goal: np.ndarray
    bounds: tuple  # (lo, hi) corners for guide-path search
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ForestSpec:
    area: tuple = (20.0, 10.0)
    tree_density: float = 0.1
    trunk_radius_range: tuple = (0.15, 0.3)
    height: float = 4.0
    seed: int = 0
    clearance: float = 1.0
    surface_density: float = DEFAULT_SURFACE_DENSITY
    flight_height: Optional[float] = None

    def __post_init__(self):
        w, d = self.area
        rmin, rmax = self.trunk_radius_range
        if not (w > 0 and d > 0):
            raise InvalidParameter("forest area must be positive")
        if not self.tree_density > 0:
            raise InvalidParameter("tree_density must be > 0")
        if not (0 < rmin <= rmax):
            raise InvalidParameter("trunk radii must satisfy 0 < min <= max")
        if w * d * self.tree_density < 1:
            raise InvalidParameter("area * density must allow at least one tree")
        if not self.height > 0:
            raise InvalidParameter("height must be > 0")

    @property
    def tree_count(self) -> int:
        w, d = self.area
        return int(round(w * d * self.tree_density))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["area"] = list(self.area)
        out["trunk_radius_range"] = list(self.trunk_radius_range)
        return out


def generate_forest(spec: ForestSpec) -> GeneratedScene:
    """Rejection-sampled vertical trunks between a start and goal on opposite edges."""
    w, d = spec.area
    rmin, rmax = spec.trunk_radius_range
    fh = spec.flight_height if spec.flight_height is not None else spec.height / 2
    start = np.array([0.0, d / 2, fh])
    goal = np.array([w, d / 2, fh])
    rng = np.random.default_rng(spec.seed)

    count = spec.tree_count
    trees: list[tuple[float, float, float]] = []
    for _ in range(10 * count):
        if len(trees) == count:
            break
        x, y = rng.uniform(0, w), rng.uniform(0, d)
        r = rng.uniform(rmin, rmax)
        if any(math.hypot(x - p[0], y - p[1]) < spec.clearance + r for p in (start, goal)):
            continue
        if any(math.hypot(x - tx, y - ty) < 2 * rmax for tx, ty, _ in trees):
            continue
        trees.append((x, y, r))
    if len(trees) < count:
        raise DensityInfeasible(
            f"placed {len(trees)} of {count} trees in {10 * count} attempts",
            placed=len(trees),
            requested=count,
        )

    points = np.concatenate(
        [discretize_cylinder((x, y, 0.0), r, spec.height, spec.surface_density, caps=False) for x, y, r in trees]
    )
    meta = {"kind": "forest", "spec": spec.to_dict(), "trees": [list(t) for t in trees]}
    bounds = (np.array([0.0, 0.0, fh]), np.array([w, d, fh]))
    return GeneratedScene(build_scene(points), start, goal, bounds, meta)


@dataclass(frozen=True)
class MazeSpec:
    """Grid maze; ``grid`` rows are strings with ``#`` for wall cells and ``.`` for free.

    Row index maps to +y and column index to +x. ``start_cell``/``goal_cell``
    default to the first and last free cell in row-major order.
    """

    grid: tuple
    cell_size: float = 2.0
    wall_height: float = 3.0
    box_fill_fraction: float = 0.0
    seed: int = 0
    start_cell: Optional[tuple] = None
    goal_cell: Optional[tuple] = None
    box_size_fraction: float = 0.5
    surface_density: float = DEFAULT_SURFACE_DENSITY

    def __post_init__(self):
        rows = tuple(str(r) for r in self.grid)
        if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
            raise InvalidParameter("maze grid must be a non-empty rectangle")
        if set("".join(rows)) - {"#", "."}:
            raise InvalidParameter("maze grid may only contain '#' and '.'")
        object.__setattr__(self, "grid", rows)
        if not self.cell_size > 0 or not self.wall_height > 0:
            raise InvalidParameter("cell_size and wall_height must be > 0")
        if not 0 <= self.box_fill_fraction <= 1:
            raise InvalidParameter("box_fill_fraction must lie in [0, 1]")
        if not 0 < self.box_size_fraction < 1:
            raise InvalidParameter("box_size_fraction must lie in (0, 1)")
        free = self.free_cells()
        if not free:
            raise InfeasibleMaze("maze grid has no free cell")
        for name, default in (("start_cell", free[0]), ("goal_cell", free[-1])):
            cell = getattr(self, name)
            cell = default if cell is None else tuple(int(c) for c in cell)
            if cell not in free:
                raise InfeasibleMaze(f"{name} {cell} is not a free cell")
            object.__setattr__(self, name, cell)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.grid), len(self.grid[0])

    def free_cells(self) -> list[tuple[int, int]]:
        return [(r, c) for r, row in enumerate(self.grid) for c, ch in enumerate(row) if ch == "."]

    def cell_center(self, cell, z: float) -> np.ndarray:
        r, c = cell
        return np.array([(c + 0.5) * self.cell_size, (r + 0.5) * self.cell_size, z])

    def to_dict(self) -> dict:
        out = asdict(self)
        out["grid"] = list(self.grid)
        out["start_cell"] = list(self.start_cell)
        out["goal_cell"] = list(self.goal_cell)
        return out


def _connected(blocked: set, spec: MazeSpec) -> bool:
    n_rows, n_cols = spec.shape
    seen = {spec.start_cell}
    queue = deque([spec.start_cell])
    while queue:
        r, c = queue.popleft()
        if (r, c) == spec.goal_cell:
            return True
        for nr, nc in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            nxt = (nr, nc)
            if 0 <= nr < n_rows and 0 <= nc < n_cols and nxt not in blocked and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def generate_maze(spec: MazeSpec) -> GeneratedScene:
    """Walls extruded from grid cells inside a boundary ring, plus random boxes."""
    n_rows, n_cols = spec.shape
    walls = {(r, c) for r, row in enumerate(spec.grid) for c, ch in enumerate(row) if ch == "#"}
    if not _connected(walls, spec):
        raise InfeasibleMaze("start and goal cells are not connected")

    rng = np.random.default_rng(spec.seed)
    candidates = [cell for cell in spec.free_cells() if cell not in (spec.start_cell, spec.goal_cell)]
    wanted = int(round(spec.box_fill_fraction * len(candidates)))
    boxes: list[tuple[int, int]] = []
    blocked = set(walls)
    for k in rng.permutation(len(candidates)):
        if len(boxes) == wanted:
            break
        cell = candidates[int(k)]
        if _connected(blocked | {cell}, spec):
            blocked.add(cell)
            boxes.append(cell)

    def is_wall(r, c):
        inside = 0 <= r < n_rows and 0 <= c < n_cols
        return (r, c) in walls if inside else True

    cs, h = spec.cell_size, spec.wall_height
    parts = []
    for r in range(-1, n_rows + 1):
        for c in range(-1, n_cols + 1):
            if not is_wall(r, c):
                continue
            faces = ["z+"]
            for face, (nr, nc) in (("x-", (r, c - 1)), ("x+", (r, c + 1)), ("y-", (r - 1, c)), ("y+", (r + 1, c))):
                in_ring = -1 <= nr <= n_rows and -1 <= nc <= n_cols
                if in_ring and not is_wall(nr, nc):
                    faces.append(face)
            if len(faces) == 1 and (r in (-1, n_rows) or c in (-1, n_cols)):
                continue  # ring cell with no free neighbour
            lo = np.array([c * cs, r * cs, 0.0])
            parts.append(discretize_box(lo, lo + [cs, cs, h], spec.surface_density, faces))
    half = spec.box_size_fraction * cs / 2
    for r, c in boxes:
        mid = spec.cell_center((r, c), 0.0)
        lo = mid - [half, half, 0.0]
        hi = mid + [half, half, h]
        parts.append(discretize_box(lo, hi, spec.surface_density, ("x-", "x+", "y-", "y+", "z+")))

    fz = h / 2
    start, goal = spec.cell_center(spec.start_cell, fz), spec.cell_center(spec.goal_cell, fz)
    bounds = (np.array([0.0, 0.0, fz]), np.array([n_cols * cs, n_rows * cs, fz]))
    meta = {"kind": "maze", "spec": spec.to_dict(), "boxes": [list(b) for b in boxes]}
    return GeneratedScene(build_scene(np.concatenate(parts)), start, goal, bounds, meta)


# -- guide paths ------------------------------------------------------------


def _point_segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(points))
    foot = a + t[:, None] * ab
    return np.sqrt(((points - foot) ** 2).sum(axis=1))


def segment_is_free(scene: Optional[ObstacleScene], a, b, r_d: float, step: float) -> bool:
    """True when no obstacle point lies within ``r_d`` of segment ab."""
    if scene is None:
        return True
    a, b = np.asarray(a, float), np.asarray(b, float)
    length = float(np.linalg.norm(b - a))
    n = max(2, int(math.ceil(length / step)) + 1)
    samples = a + np.linspace(0.0, 1.0, n)[:, None] * (b - a)
    half_gap = length / (n - 1) / 2
    dist, _ = scene.index.query(samples, k=1)
    if np.all(dist >= r_d + half_gap):
        return True
    near = scene.index.query_ball_point(samples[dist < r_d + half_gap], r_d + half_gap)
    idx = np.unique(np.concatenate([np.asarray(c, dtype=np.intp) for c in near]))
    if len(idx) == 0:
        return True
    return bool(np.all(_point_segment_distances(scene.points[idx], a, b) >= r_d))


def shortcut(points: Sequence[np.ndarray], scene: Optional[ObstacleScene], r_d: float, step: float) -> list:
    """Greedy line-of-sight simplification: jump to the farthest visible waypoint."""
    pts = list(points)
    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        for j in range(len(pts) - 1, i, -1):
            if j == i + 1 or segment_is_free(scene, pts[i], pts[j], r_d, step):
                out.append(pts[j])
                i = j
                break
    return out


_NEIGHBOURS = [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]


def compute_guide_path(
    scene: Optional[ObstacleScene],
    start,
    goal,
    voxel: float,
    r_d: float,
    bounds: Optional[tuple] = None,
    margin: float = 0.0,
) -> GuidePath:
    """Shortest 26-connected voxel path between start and goal, then shortcut.

    Voxels whose centre lies closer than ``r_d + margin`` to an obstacle are
    blocked; start and goal only need ``r_d``.
    ``bounds`` restricts the search box; by default it is the scene's bounding
    box grown by ``r_d + 2 * voxel``.
    """
    if not voxel > 0:
        raise InvalidParameter("voxel must be > 0")
    start, goal = as_point(start, "start"), as_point(goal, "goal")
    if np.array_equal(start, goal):
        raise InvalidParameter("start and goal coincide")
    if scene is None:
        return GuidePath([start, goal])
    for name, p in (("start", start), ("goal", goal)):
        if nearest_distances(scene, p)[0] < r_d:
            raise Unreachable(f"{name} lies within the drone radius of an obstacle")

    inflate = r_d + margin
    if bounds is None:
        pad = inflate + 2 * voxel
        lo = np.minimum(scene.bounds[0], np.minimum(start, goal)) - pad
        hi = np.maximum(scene.bounds[1], np.maximum(start, goal)) + pad
    else:
        lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
        lo, hi = np.minimum(lo, np.minimum(start, goal)), np.maximum(hi, np.maximum(start, goal))
    dims = np.floor((hi - lo) / voxel).astype(int) + 1

    ii = np.indices(dims).reshape(3, -1).T
    centers = lo + ii * voxel
    dist, _ = scene.index.query(centers, k=1, distance_upper_bound=inflate)
    blocked = (dist < inflate).reshape(dims)

    def cell_of(p):
        return tuple(np.clip(np.rint((p - lo) / voxel).astype(int), 0, dims - 1))

    s_cell, g_cell = cell_of(start), cell_of(goal)
    for cell in (s_cell, g_cell):
        # endpoints are allowed inside the margin band
        if blocked[cell] and nearest_distances(scene, lo + np.array(cell) * voxel)[0] < r_d:
            raise Unreachable("start or goal voxel is blocked")
        blocked[cell] = False

    cells = _astar(blocked, s_cell, g_cell)
    if cells is None:
        raise Unreachable("no collision-free voxel path between start and goal")

    pts = [start] + [lo + np.array(c) * voxel for c in cells[1:-1]] + [goal]
    pts = [p for k, p in enumerate(pts) if k == 0 or not np.array_equal(p, pts[k - 1])]
    return GuidePath(shortcut(pts, scene, inflate, voxel / 2))


def _astar(blocked: np.ndarray, start: tuple, goal: tuple) -> Optional[list]:
    dims = blocked.shape
    goal_arr = np.array(goal, dtype=float)
    steps = [(o, math.sqrt(o[0] ** 2 + o[1] ** 2 + o[2] ** 2)) for o in _NEIGHBOURS if all(
        dims[k] > 1 or o[k] == 0 for k in range(3))]

    def h(c):
        return math.dist(c, goal_arr)

    g = {start: 0.0}
    parent = {start: None}
    closed = set()
    counter = itertools.count()
    heap = [(h(start), next(counter), start)]
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            out = []
            while cur is not None:
                out.append(cur)
                cur = parent[cur]
            return out[::-1]
        closed.add(cur)
        gc = g[cur]
        x, y, z = cur
        for (dx, dy, dz), cost in steps:
            nxt = (x + dx, y + dy, z + dz)
            if not (0 <= nxt[0] < dims[0] and 0 <= nxt[1] < dims[1] and 0 <= nxt[2] < dims[2]):
                continue
            if blocked[nxt] or nxt in closed:
                continue
            ng = gc + cost
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                parent[nxt] = cur
                heapq.heappush(heap, (ng + h(nxt), next(counter), nxt))
    return None
