"""Task difficulty scores: traversability obstruction, view occlusion, angle over length."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .corridor import CorridorConfig, SphereCorridor, grow_corridor
from .errors import ConfigError, DegenerateCorridor, FlightDiffError
from .geometry import GuidePath, ObstacleScene, SensorConfig, sample_arc_lengths

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class VoSamplingConfig:
    """How view-occlusion samples are placed along the path.

    Set exactly one of ``n_samples`` (evenly spaced, endpoints included) and
    ``spacing`` (metres). ``max_range`` limits the obstacle search per sector.
    """

    n_samples: Optional[int] = None
    spacing: Optional[float] = 0.5
    max_range: float = math.inf

    def __post_init__(self):
        if (self.n_samples is None) == (self.spacing is None):
            raise ConfigError("set exactly one of n_samples and spacing")
        if self.n_samples is not None and self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.spacing is not None and not self.spacing > 0:
            raise ConfigError("spacing must be > 0")
        if not self.max_range > 0:
            raise ConfigError("max_range must be > 0")

    def arc_lengths(self, length: float) -> np.ndarray:
        if self.n_samples is not None:
            return np.linspace(0.0, length, self.n_samples)
        return sample_arc_lengths(length, self.spacing)

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.max_range):
            out["max_range"] = None
        return out


@dataclass
class DifficultyScores:
    to: float
    vo: float
    aol: float
    provenance: dict = field(default_factory=dict)
    corridor: Optional[SphereCorridor] = field(default=None, repr=False)

    def as_tuple(self) -> tuple[float, float, float]:
        return self.to, self.vo, self.aol


def traversability_obstruction(corridor: SphereCorridor | list, R: float) -> float:
    """Mean of R / r over the narrower half of the corridor spheres.

    Accepts a corridor or a plain sequence of radii.
    """
    radii = corridor.radii if isinstance(corridor, SphereCorridor) else np.asarray(corridor, dtype=float)
    if len(radii) == 0:
        raise DegenerateCorridor("corridor has no spheres")
    if np.any(radii <= 0):
        raise DegenerateCorridor("corridor contains a zero-radius sphere")
    n = len(radii)
    smallest = np.sort(radii)[: n // 2]
    return float(sum(R / r for r in smallest) / n)


def view_frame(forward: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal (forward, left, up) frame with up as close to world-up as possible."""
    f = forward / np.linalg.norm(forward)
    left = np.cross(WORLD_UP, f)
    if np.linalg.norm(left) < 1e-9:
        left = np.cross(np.array([1.0, 0.0, 0.0]), f)
    left = left / np.linalg.norm(left)
    up = np.cross(f, left)
    return f, left, up


def sector_distances(
    points: np.ndarray,
    position: np.ndarray,
    forward: np.ndarray,
    sensor: SensorConfig,
    max_range: float = math.inf,
) -> np.ndarray:
    """Nearest obstacle distance inside each azimuthal FOV sector (inf if empty).

    Sector 0 is the rightmost wedge; azimuth grows to the left.
    """
    M = sensor.fov_sectors
    out = np.full(M, math.inf)
    if len(points) == 0:
        return out
    f, left, up = view_frame(forward)
    rel = points - position
    dist = np.sqrt((rel**2).sum(axis=1))
    xf, xl, xu = rel @ f, rel @ left, rel @ up
    azim = np.arctan2(xl, xf)
    elev = np.arctan2(xu, np.hypot(xf, xl))
    half_h, half_v = sensor.fov_horizontal / 2, sensor.fov_vertical / 2
    keep = (dist > 0) & (dist <= max_range) & (np.abs(azim) <= half_h) & (np.abs(elev) <= half_v)
    if not np.any(keep):
        return out
    sector = np.floor((azim[keep] + half_h) / (sensor.fov_horizontal / M)).astype(int)
    np.minimum.at(out, np.clip(sector, 0, M - 1), dist[keep])
    return out


def view_occlusion(
    scene: Optional[ObstacleScene],
    path: GuidePath,
    sensor: SensorConfig,
    cfg: VoSamplingConfig,
) -> float:
    weights = np.asarray(sensor.sector_weights, dtype=float)
    if len(weights) != sensor.fov_sectors:
        raise ConfigError(
            f"{len(weights)} sector weights given for {sensor.fov_sectors} sectors"
        )
    arcs = cfg.arc_lengths(path.length)
    if scene is None:
        return 0.0
    R = sensor.sensing_range
    points = scene.points
    total = 0.0
    for s in arcs:
        q, v = path.point_at(s)
        if math.isfinite(cfg.max_range):
            near = scene.index.query_ball_point(q, cfg.max_range)
            pts = points[np.sort(np.asarray(near, dtype=np.intp))]
        else:
            pts = points
        d = sector_distances(pts, q, v, sensor, cfg.max_range)
        hit = np.isfinite(d)
        total += float(np.sum(weights[hit] * R / d[hit]))
    return total / len(arcs)


def turning_angles(path: GuidePath) -> np.ndarray:
    u = path.directions
    cosines = np.clip((u[:-1] * u[1:]).sum(axis=1), -1.0, 1.0)
    return np.arccos(cosines)


def angle_over_length(path: GuidePath) -> float:
    theta = turning_angles(path)
    return float(np.sum(np.expm1(theta / (math.pi / 6))) / path.length)


def score_test_case(
    scene: Optional[ObstacleScene],
    path: GuidePath,
    sensor: SensorConfig,
    corridor_cfg: CorridorConfig,
    vo_cfg: VoSamplingConfig,
) -> DifficultyScores:
    try:
        corridor = grow_corridor(scene, path, sensor, corridor_cfg)
        to = traversability_obstruction(corridor, sensor.sensing_range)
    except FlightDiffError as err:
        err.details.setdefault("metric", "TO")
        raise
    try:
        vo = view_occlusion(scene, path, sensor, vo_cfg)
    except FlightDiffError as err:
        err.details.setdefault("metric", "VO")
        raise
    aol = angle_over_length(path)
    provenance = {
        "sensor": sensor_to_dict(sensor),
        "corridor": corridor_cfg.to_dict(),
        "vo": vo_cfg.to_dict(),
        "corridor_spheres": len(corridor.spheres),
        "corridor_complete": corridor.complete,
        "vo_samples": int(len(vo_cfg.arc_lengths(path.length))),
        "path_length": path.length,
    }
    return DifficultyScores(to, vo, aol, provenance, corridor)


def sensor_to_dict(sensor: SensorConfig) -> dict:
    return {
        "sensing_range": sensor.sensing_range,
        "drone_radius": sensor.drone_radius,
        "fov_horizontal_deg": math.degrees(sensor.fov_horizontal),
        "fov_vertical_deg": math.degrees(sensor.fov_vertical),
        "fov_sectors": sensor.fov_sectors,
        "sector_weights": list(sensor.sector_weights),
    }

