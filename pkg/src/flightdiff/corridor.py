"""Sphere flight corridor grown along a guide path by sampled candidate scoring."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import CoverageStall, InvalidParameter, ZeroRadiusStart
from .geometry import (
    GuidePath,
    ObstacleScene,
    SensorConfig,
    Sphere,
    as_point,
    nearest_distances,
    nearest_obstacle,
    sphere_overlap_volume,
)

STALL_LIMIT = 20


@dataclass(frozen=True)
class CorridorConfig:
    """Candidate sampling and scoring parameters.

    ``max_radius`` optionally caps every sphere radius; ``None`` leaves it uncapped.
    """

    K: int = 100
    sigma: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0
    min_radius: float = 0.05
    max_spheres: int = 10000
    rng_seed: int = 0
    max_radius: Optional[float] = None

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameter("K must be >= 1")
        if not self.sigma > 0:
            raise InvalidParameter("sigma must be > 0")
        for name in ("k1", "k2", "k3", "k4"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be > 0")
        if not self.min_radius >= 0:
            raise InvalidParameter("min_radius must be >= 0")
        if self.max_spheres < 1:
            raise InvalidParameter("max_spheres must be >= 1")
        if self.max_radius is not None and not self.max_radius > 0:
            raise InvalidParameter("max_radius must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GrowthStep:
    p_hi: np.ndarray
    z: np.ndarray
    prev: Sphere


@dataclass(eq=False)
class SphereCorridor:
    spheres: list
    coverage_lengths: list
    path_length: float

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.spheres])

    @property
    def complete(self) -> bool:
        return bool(self.coverage_lengths) and self.coverage_lengths[-1] >= self.path_length

    def to_records(self) -> list[dict]:
        return [
            {"center": [float(c) for c in s.center], "radius": float(s.radius), "coverage_length": float(cov)}
            for s, cov in zip(self.spheres, self.coverage_lengths)
        ]


def candidate_radius(scene: Optional[ObstacleScene], p_cand, r_d: float) -> float:
    _, dist = nearest_obstacle(scene, p_cand)
    return max(0.0, dist - r_d)


def score_candidate(cand: Sphere, step: GrowthStep, cfg: CorridorConfig) -> float:
    """Volume and overlap reward minus forward and lateral offset penalties."""
    d = cand.center - step.p_hi
    along = float(d @ step.z)
    lateral = float(np.linalg.norm(d - along * step.z))
    return (
        cfg.k1 * cand.volume
        + cfg.k2 * sphere_overlap_volume(cand, step.prev)
        - cfg.k3 * along
        - cfg.k4 * lateral
    )


def sphere_path_intervals(path: GuidePath, sphere: Sphere) -> list[tuple[float, float]]:
    """Arc-length intervals of ``path`` lying inside ``sphere`` (closed ball)."""
    a = path.waypoints[:-1]
    u = path.directions
    rel = a - sphere.center
    b = (rel * u).sum(axis=1)
    c = (rel * rel).sum(axis=1) - sphere.radius**2
    disc = b * b - c
    out = []
    for i in np.nonzero(disc >= 0)[0]:
        root = math.sqrt(disc[i])
        t0 = max(-b[i] - root, 0.0)
        t1 = min(-b[i] + root, path.segment_lengths[i])
        if t0 <= t1:
            base = path.cumulative_lengths[i]
            out.append((float(base + t0), float(base + t1)))
    return out


def covered_length(intervals: list[tuple[float, float]], tol: float = 1e-12) -> float:
    """End of the contiguous covered stretch starting at arc length 0."""
    cur = None
    for lo, hi in sorted(intervals):
        if cur is None:
            if lo > tol:
                return 0.0
            cur = hi
        elif lo <= cur + tol:
            cur = max(cur, hi)
        else:
            break
    return 0.0 if cur is None else cur


def grow_corridor(
    scene: Optional[ObstacleScene],
    path: GuidePath,
    sensor: SensorConfig,
    cfg: CorridorConfig,
) -> SphereCorridor:
    r_d = sensor.drone_radius
    r_max = cfg.max_radius if cfg.max_radius is not None else math.inf
    rng = np.random.default_rng(cfg.rng_seed)
    L = path.length

    start = path.waypoints[0]
    r0 = candidate_radius(scene, start, r_d)
    if r0 < cfg.min_radius or r0 == 0:
        raise ZeroRadiusStart(
            f"free radius at path start is {r0:.6g} m, below min_radius {cfg.min_radius:g} m",
            radius=r0,
        )
    first = Sphere(start, min(r0, r_max))
    intervals = sphere_path_intervals(path, first)
    coverage = min(covered_length(intervals), L)
    spheres, coverage_lengths = [first], [coverage]
    stalls = 0
    sigma = cfg.sigma

    while coverage < L and len(spheres) < cfg.max_spheres:
        prev = spheres[-1]
        p_hi, tangent = path.point_at(coverage)
        z = p_hi - prev.center
        norm = float(np.linalg.norm(z))
        z = z / norm if norm > 1e-12 else tangent
        step = GrowthStep(p_hi, z, prev)

        centers = p_hi + sigma * rng.standard_normal((cfg.K, 3))
        radii = np.minimum(np.maximum(nearest_distances(scene, centers) - r_d, 0.0), r_max)
        offsets = np.linalg.norm(centers - p_hi, axis=1)
        # a candidate must keep the corridor connected: it has to contain p_hi
        admissible = (radii >= cfg.min_radius) & (radii > 0) & (offsets < radii)

        best, best_score = None, -math.inf
        for k in np.nonzero(admissible)[0]:
            cand = Sphere(centers[k], float(radii[k]))
            s = score_candidate(cand, step, cfg)
            if s > best_score:
                best, best_score = cand, s

        new_coverage = coverage
        if best is not None:
            new_coverage = min(covered_length(intervals + sphere_path_intervals(path, best)), L)
        if best is None or new_coverage <= coverage:
            stalls += 1
            # narrow passages: sample closer to the frontier on retry
            sigma *= 0.5
            if stalls >= STALL_LIMIT:
                raise CoverageStall(
                    f"corridor stopped advancing at {coverage:.6g} of {L:.6g} m",
                    coverage=coverage,
                    path_length=L,
                    spheres=len(spheres),
                )
            continue
        stalls = 0
        sigma = cfg.sigma
        intervals += sphere_path_intervals(path, best)
        spheres.append(best)
        coverage = new_coverage
        coverage_lengths.append(coverage)

    return SphereCorridor(spheres, coverage_lengths, L)


def corridor_from_records(records: list[dict], path_length: float) -> SphereCorridor:
    spheres = [Sphere(as_point(r["center"]), float(r["radius"])) for r in records]
    return SphereCorridor(spheres, [float(r["coverage_length"]) for r in records], path_length)

