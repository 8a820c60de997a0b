"""Point-set scenes, guide paths and sphere geometry.

Obstacles are represented by surface point samples. Nearest-obstacle queries
go through a k-d tree, but the reported distance is always recomputed with the
plain Euclidean formula so it matches a linear scan bit for bit. Ties are
broken by lowest insertion index.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyScene, InvalidGeometry, InvalidParameter

DEFAULT_SURFACE_DENSITY = 20.0  # points per m^2


def query_workers() -> int:
    """Parallelism for k-d tree queries, capped by FLIGHTDIFF_THREADS."""
    raw = os.environ.get("FLIGHTDIFF_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def as_point(p, name: str = "point") -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise InvalidGeometry(f"{name} must have 3 coordinates, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometry(f"{name} has non-finite coordinates")
    return arr


def euclidean(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.sqrt(((points - q) ** 2).sum(axis=1))


class ObstacleScene:
    """Immutable obstacle point set with a nearest-neighbour index."""

    def __init__(self, points: np.ndarray):
        self.points = points
        self.points.setflags(write=False)
        self.index = cKDTree(points)
        self.bounds = (points.min(axis=0), points.max(axis=0))

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"ObstacleScene(n_points={len(self.points)})"


def build_scene(points) -> ObstacleScene:
    arr = np.array(points, dtype=float)
    if arr.size == 0:
        raise EmptyScene("scene must contain at least one point")
    arr = arr.reshape(-1, 3) if arr.ndim == 1 else arr
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidGeometry(f"points must be an (N, 3) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometry("scene contains non-finite coordinates")
    return ObstacleScene(np.ascontiguousarray(arr))


def _exact_nearest(scene: ObstacleScene, q: np.ndarray, approx: float) -> tuple[int, float]:
    candidates = scene.index.query_ball_point(q, approx * (1 + 1e-9) + 1e-12)
    idx = np.array(sorted(candidates), dtype=np.intp)
    dist = euclidean(scene.points[idx], q)
    k = int(np.argmin(dist))
    return int(idx[k]), float(dist[k])


def nearest_obstacle(scene: Optional[ObstacleScene], p) -> tuple[Optional[np.ndarray], float]:
    """Closest scene point to ``p`` and its distance.

    ``scene=None`` stands for free space and returns ``(None, inf)``.
    """
    q = as_point(p)
    if scene is None:
        return None, math.inf
    approx, _ = scene.index.query(q, k=1)
    i, d = _exact_nearest(scene, q, float(approx))
    return scene.points[i].copy(), d


def nearest_distances(scene: Optional[ObstacleScene], queries) -> np.ndarray:
    """Exact nearest-obstacle distance for each row of ``queries``."""
    Q = np.asarray(queries, dtype=float).reshape(-1, 3)
    if scene is None:
        return np.full(len(Q), math.inf)
    approx, _ = scene.index.query(Q, k=1, workers=query_workers())
    out = np.empty(len(Q))
    for n, (q, a) in enumerate(zip(Q, approx)):
        out[n] = _exact_nearest(scene, q, float(a))[1]
    return out


class GuidePath:
    """Polyline with arc-length parameterisation."""

    def __init__(self, waypoints):
        wp = np.array(waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3:
            raise InvalidGeometry(f"waypoints must be an (N, 3) array, got shape {wp.shape}")
        if len(wp) < 2:
            raise InvalidGeometry("a guide path needs at least 2 waypoints")
        if not np.all(np.isfinite(wp)):
            raise InvalidGeometry("waypoints contain non-finite coordinates")
        seg = np.linalg.norm(np.diff(wp, axis=0), axis=1)
        if np.any(seg == 0):
            raise InvalidGeometry("consecutive waypoints must differ")
        self.waypoints = wp
        self.segment_lengths = seg
        self.cumulative_lengths = np.concatenate([[0.0], np.cumsum(seg)])
        self.directions = np.diff(wp, axis=0) / seg[:, None]
        for arr in (self.waypoints, self.segment_lengths, self.cumulative_lengths, self.directions):
            arr.setflags(write=False)

    @property
    def length(self) -> float:
        return float(self.cumulative_lengths[-1])

    def segment_at(self, s: float) -> int:
        # waypoints belong to their outgoing segment
        i = int(np.searchsorted(self.cumulative_lengths, s, side="right")) - 1
        return min(max(i, 0), len(self.segment_lengths) - 1)

    def point_at(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and unit tangent at arc length ``s`` (clamped to [0, L])."""
        s = min(max(float(s), 0.0), self.length)
        i = self.segment_at(s)
        if s == self.length:
            return self.waypoints[-1].copy(), self.directions[-1].copy()
        pos = self.waypoints[i] + (s - self.cumulative_lengths[i]) * self.directions[i]
        return pos, self.directions[i].copy()

    def project(self, p) -> float:
        """Arc length of the path point closest to ``p`` (earliest on ties)."""
        q = as_point(p)
        a = self.waypoints[:-1]
        rel = q - a
        t = np.clip((rel * self.directions).sum(axis=1), 0.0, self.segment_lengths)
        foot = a + t[:, None] * self.directions
        dist = euclidean(foot, q)
        k = int(np.argmin(dist))
        return float(self.cumulative_lengths[k] + t[k])

    def __len__(self) -> int:
        return len(self.waypoints)


def sample_path(path: GuidePath, spacing: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Positions and unit tangents every ``spacing`` metres, endpoint included."""
    return [path.point_at(s) for s in sample_arc_lengths(path.length, spacing)]


def sample_arc_lengths(length: float, spacing: float) -> np.ndarray:
    if not spacing > 0 or not math.isfinite(spacing):
        raise InvalidParameter(f"spacing must be positive and finite, got {spacing}")
    n = int(math.floor(length / spacing))
    s = np.arange(n + 1) * spacing
    if length - s[-1] <= 1e-9 * max(1.0, length):
        s[-1] = length
        if len(s) == 1:
            s = np.array([0.0, length])
    else:
        s = np.append(s, length)
    return s


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center, "sphere center"))
        if not self.radius >= 0:
            raise InvalidGeometry(f"sphere radius must be >= 0, got {self.radius}")

    @property
    def volume(self) -> float:
        return sphere_volume(self.radius)

    def contains(self, p, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(np.asarray(p) - self.center)) <= self.radius + tol


def sphere_volume(r: float) -> float:
    return 4.0 / 3.0 * math.pi * r**3


def sphere_overlap_volume(a: Sphere, b: Sphere) -> float:
    """Volume of the intersection of two balls (lens formula)."""
    d = float(np.linalg.norm(a.center - b.center))
    r1, r2 = a.radius, b.radius
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return sphere_volume(min(r1, r2))
    return math.pi * (r1 + r2 - d) ** 2 * (
        d * d + 2 * d * (r1 + r2) - 3 * (r1 - r2) ** 2
    ) / (12 * d)


@dataclass(frozen=True)
class SensorConfig:
    """Depth sensor and vehicle parameters.

    Angles are in radians. ``sector_weights`` defaults to a symmetric
    triangular profile that peaks at the centre of the field of view.
    """

    sensing_range: float = 10.0
    drone_radius: float = 0.25
    fov_horizontal: float = math.radians(90.0)
    fov_vertical: float = math.radians(60.0)
    fov_sectors: int = 9
    sector_weights: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if not self.sensing_range > 0:
            raise InvalidParameter("sensing_range must be > 0")
        if not self.drone_radius > 0:
            raise InvalidParameter("drone_radius must be > 0")
        for name in ("fov_horizontal", "fov_vertical"):
            v = getattr(self, name)
            if not 0 < v <= math.pi:
                raise InvalidParameter(f"{name} must lie in (0, pi], got {v}")
        if self.fov_sectors < 1:
            raise InvalidParameter("fov_sectors must be >= 1")
        if self.sector_weights is None:
            object.__setattr__(self, "sector_weights", default_sector_weights(self.fov_sectors))
        else:
            w = tuple(float(x) for x in self.sector_weights)
            if any(x < 0 for x in w):
                raise InvalidParameter("sector weights must be nonnegative")
            if abs(sum(w) - 1.0) > 1e-9:
                raise InvalidParameter(f"sector weights must sum to 1, got {sum(w)!r}")
            object.__setattr__(self, "sector_weights", w)


def default_sector_weights(m: int) -> tuple:
    raw = [min(j + 1, m - j) for j in range(m)]
    total = sum(raw)
    return tuple(x / total for x in raw)


# -- surface discretisation of primitives ---------------------------------


def _count(extent: float, density: float) -> int:
    return max(2, int(math.ceil(extent * math.sqrt(density))) + 1)


def discretize_sphere(center, radius: float, density: float = DEFAULT_SURFACE_DENSITY) -> np.ndarray:
    """Fibonacci lattice on the sphere surface."""
    c = as_point(center, "center")
    n = max(12, int(math.ceil(4 * math.pi * radius**2 * density)))
    k = np.arange(n) + 0.5
    polar = np.arccos(1 - 2 * k / n)
    azim = math.pi * (1 + math.sqrt(5)) * k
    unit = np.stack([np.cos(azim) * np.sin(polar), np.sin(azim) * np.sin(polar), np.cos(polar)], axis=1)
    return c + radius * unit


def discretize_cylinder(
    base, radius: float, height: float, density: float = DEFAULT_SURFACE_DENSITY, caps: bool = True
) -> np.ndarray:
    """Vertical cylinder standing on ``base`` (centre of the bottom disc)."""
    b = as_point(base, "base")
    n_theta = max(8, int(math.ceil(2 * math.pi * radius * math.sqrt(density))))
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    z = np.linspace(0.0, height, _count(height, density))
    tt, zz = np.meshgrid(theta, z)
    side = np.stack([radius * np.cos(tt).ravel(), radius * np.sin(tt).ravel(), zz.ravel()], axis=1)
    parts = [side]
    if caps:
        step = 1.0 / math.sqrt(density)
        disc = [np.zeros((1, 2))]
        for rr in np.arange(step, radius, step):
            m = max(6, int(math.ceil(2 * math.pi * rr / step)))
            a = 2 * math.pi * np.arange(m) / m
            disc.append(np.stack([rr * np.cos(a), rr * np.sin(a)], axis=1))
        disc = np.concatenate(disc)
        for zc in (0.0, height):
            parts.append(np.column_stack([disc, np.full(len(disc), zc)]))
    return b + np.concatenate(parts)


BOX_FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


def discretize_box(
    lo, hi, density: float = DEFAULT_SURFACE_DENSITY, faces: Sequence[str] = BOX_FACES
) -> np.ndarray:
    """Grid samples on the selected faces of an axis-aligned box."""
    lo = as_point(lo, "box min")
    hi = as_point(hi, "box max")
    if np.any(hi <= lo):
        raise InvalidGeometry("box max must exceed box min on every axis")
    axes = [np.linspace(lo[k], hi[k], _count(hi[k] - lo[k], density)) for k in range(3)]
    parts = []
    for face in faces:
        k = "xyz".index(face[0])
        value = lo[k] if face[1] == "-" else hi[k]
        u, v = [axes[j] for j in range(3) if j != k]
        uu, vv = np.meshgrid(u, v)
        cols = [uu.ravel(), vv.ravel()]
        cols.insert(k, np.full(uu.size, value))
        parts.append(np.stack(cols, axis=1))
    if not parts:
        return np.empty((0, 3))
    return np.concatenate(parts)
