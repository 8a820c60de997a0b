"""Flight performance metrics for recorded trajectories.

Integrals use the trapezoidal rule on the log's own timestamps. Acceleration,
jerk and curvature averages are normalised by the flown arc length.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import DegenerateTrajectory, InsufficientData, InvalidLog, InvalidParameter
from .geometry import GuidePath, ObstacleScene, SensorConfig, as_point, nearest_distances

HOVER_SPEED = 1e-3  # m/s; curvature is undefined below this
TIMING_STAGES = ("mapping", "planning", "control")


@dataclass(frozen=True, eq=False)
class TrajectoryLog:
    t: np.ndarray
    x: np.ndarray
    v: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    j: Optional[np.ndarray] = None
    timing: Optional[dict] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        x = np.asarray(self.x, dtype=float).reshape(-1, 3)
        if len(t) != len(x):
            raise InvalidLog(f"{len(t)} timestamps for {len(x)} positions")
        if len(t) and not np.all(np.diff(t) > 0):
            raise InvalidLog("timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        for name in ("v", "a", "j"):
            val = getattr(self, name)
            if val is not None:
                arr = np.asarray(val, dtype=float).reshape(-1, 3)
                if len(arr) != len(t):
                    raise InvalidLog(f"{name} has {len(arr)} rows, expected {len(t)}")
                object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0

    def truncated(self, n: int) -> "TrajectoryLog":
        cut = {k: (None if getattr(self, k) is None else getattr(self, k)[:n]) for k in ("v", "a", "j")}
        return replace(self, t=self.t[:n], x=self.x[:n], **cut)


@dataclass(frozen=True)
class GoalSpec:
    goal: tuple
    radius: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "goal", tuple(float(c) for c in as_point(self.goal, "goal")))
        if not self.radius > 0:
            raise InvalidParameter("goal radius must be > 0")


@dataclass
class PerformanceReport:
    success: bool
    avg_speed: float
    avg_curvature: float
    avg_acceleration: float
    avg_jerk: float
    total_time: float
    path_length: float
    progress: float
    computation_time_total: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _gradient(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.gradient(y, t, axis=0, edge_order=2)


def derive_kinematics(log: TrajectoryLog) -> TrajectoryLog:
    """Fill missing v, a, j by second-order finite differences in time."""
    if len(log) < 4:
        raise InsufficientData(f"need at least 4 samples to differentiate, got {len(log)}")
    v = log.v if log.v is not None else _gradient(log.x, log.t)
    a = log.a if log.a is not None else _gradient(v, log.t)
    j = log.j if log.j is not None else _gradient(a, log.t)
    return replace(log, v=v, a=a, j=j)


def _kinematic(log: TrajectoryLog, name: str) -> np.ndarray:
    val = getattr(log, name)
    if val is None:
        val = getattr(derive_kinematics(log), name)
    return val


def flown_length(log: TrajectoryLog) -> float:
    return float(np.linalg.norm(np.diff(log.x, axis=0), axis=1).sum())


def _positive_length(log: TrajectoryLog) -> float:
    L = flown_length(log)
    if not L > 0:
        raise InvalidLog("flown arc length is zero")
    return L


def average_speed(log: TrajectoryLog) -> float:
    T = log.duration
    if not T > 0:
        raise InvalidLog("log duration is zero")
    speed = np.linalg.norm(_kinematic(log, "v"), axis=1)
    return float(np.trapezoid(speed, log.t) / T)


def _squared_norm_per_length(log: TrajectoryLog, name: str) -> float:
    L = _positive_length(log)
    sq = (_kinematic(log, name) ** 2).sum(axis=1)
    return float(np.trapezoid(sq, log.t) / L)


def average_acceleration(log: TrajectoryLog) -> float:
    return _squared_norm_per_length(log, "a")


def average_jerk(log: TrajectoryLog) -> float:
    return _squared_norm_per_length(log, "j")


def curvature(log: TrajectoryLog) -> np.ndarray:
    """Pointwise |v x a| / |v|^3, NaN where the vehicle is hovering."""
    v, a = _kinematic(log, "v"), _kinematic(log, "a")
    speed = np.linalg.norm(v, axis=1)
    cross = np.linalg.norm(np.cross(v, a), axis=1)
    out = np.full(len(speed), np.nan)
    moving = speed > HOVER_SPEED
    out[moving] = cross[moving] / speed[moving] ** 3
    return out


def average_curvature(log: TrajectoryLog) -> float:
    L = _positive_length(log)
    kappa = curvature(log)
    moving = np.isfinite(kappa)
    if not np.any(moving):
        raise DegenerateTrajectory("every sample is below the hover speed threshold")
    speed = np.linalg.norm(_kinematic(log, "v"), axis=1)
    integrand = np.where(moving, np.nan_to_num(kappa) * speed, 0.0)
    return float(np.trapezoid(integrand, log.t) / L)


def first_collision(log: TrajectoryLog, scene: Optional[ObstacleScene], r_d: float) -> Optional[int]:
    """Index of the first sample closer than ``r_d`` to an obstacle, if any."""
    if scene is None or len(log) == 0:
        return None
    bad = np.nonzero(nearest_distances(scene, log.x) < r_d)[0]
    return int(bad[0]) if len(bad) else None


def reached_goal(log: TrajectoryLog, goal: GoalSpec) -> bool:
    if len(log) == 0:
        return False
    return bool(np.linalg.norm(log.x[-1] - np.asarray(goal.goal)) <= goal.radius)


def success(log: TrajectoryLog, goal: GoalSpec, scene: Optional[ObstacleScene], r_d: float) -> bool:
    return reached_goal(log, goal) and first_collision(log, scene, r_d) is None


def progress(
    log: TrajectoryLog,
    reference: GuidePath,
    goal: Optional[GoalSpec] = None,
    scene: Optional[ObstacleScene] = None,
    r_d: float = 0.0,
) -> float:
    """Fraction of ``reference`` completed before the first collision.

    Returns exactly 1.0 when the collision-free log ends inside the goal region.
    """
    hit = first_collision(log, scene, r_d)
    valid = log if hit is None else log.truncated(hit)
    if len(valid) == 0:
        return 0.0
    if hit is None and goal is not None and reached_goal(valid, goal):
        return 1.0
    frac = reference.project(valid.x[-1]) / reference.length
    return float(min(max(frac, 0.0), 1.0))


def evaluate(
    log: TrajectoryLog,
    scene: Optional[ObstacleScene],
    reference: GuidePath,
    goal: GoalSpec,
    sensor: SensorConfig,
) -> PerformanceReport:
    r_d = sensor.drone_radius
    full = derive_kinematics(log)
    ok = success(full, goal, scene, r_d)
    prog = progress(full, reference, goal, scene, r_d)
    comp = None
    if log.timing:
        comp = float(sum(float(log.timing.get(k, 0.0)) for k in TIMING_STAGES))
    return PerformanceReport(
        success=ok,
        avg_speed=average_speed(full),
        avg_curvature=average_curvature(full),
        avg_acceleration=average_acceleration(full),
        avg_jerk=average_jerk(full),
        total_time=full.duration,
        path_length=flown_length(full),
        progress=prog,
        computation_time_total=comp,
    )
