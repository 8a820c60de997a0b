"""Difficulty scoring and flight evaluation for quadrotor navigation test cases."""

__version__ = "0.1.0"

from .analysis import aggregate_runs, correlation_matrix
from .corridor import CorridorConfig, SphereCorridor, candidate_radius, grow_corridor, score_candidate
from .difficulty import (
    DifficultyScores,
    VoSamplingConfig,
    angle_over_length,
    score_test_case,
    traversability_obstruction,
    view_occlusion,
)
from .geometry import (
    GuidePath,
    ObstacleScene,
    SensorConfig,
    Sphere,
    build_scene,
    nearest_obstacle,
    sample_path,
    sphere_overlap_volume,
)
from .scenegen import ForestSpec, MazeSpec, compute_guide_path, generate_forest, generate_maze
from .trajmetrics import GoalSpec, PerformanceReport, TrajectoryLog, evaluate
