"""Run configuration: JSON file validated against a schema, unknown keys rejected."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .corridor import CorridorConfig
from .difficulty import VoSamplingConfig
from .errors import ConfigError, FlightDiffError, InputError
from .geometry import SensorConfig
from .scenegen import ForestSpec, MazeSpec

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_PAIR = {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = _obj(
    {
        "sensor": _obj(
            {
                "sensing_range": _POS,
                "drone_radius": _POS,
                "fov_horizontal_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "fov_vertical_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "fov_sectors": _INT1,
                "sector_weights": {"type": ["array", "null"], "items": _NONNEG, "minItems": 1},
            }
        ),
        "corridor": _obj(
            {
                "K": _INT1,
                "sigma": _POS,
                "k1": _POS,
                "k2": _POS,
                "k3": _POS,
                "k4": _POS,
                "min_radius": _NONNEG,
                "max_spheres": _INT1,
                "rng_seed": {"type": "integer", "minimum": 0},
                "max_radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
            }
        ),
        "vo": _obj(
            {
                "n_samples": {"type": ["integer", "null"], "minimum": 1},
                "spacing": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "max_range": {"type": ["number", "null"], "exclusiveMinimum": 0},
            }
        ),
        "scene": _obj(
            {
                "kind": {"enum": ["forest", "maze"]},
                "forest": _obj(
                    {
                        "area": _PAIR,
                        "tree_density": _POS,
                        "trunk_radius_range": _PAIR,
                        "height": _POS,
                        "seed": {"type": "integer", "minimum": 0},
                        "clearance": _NONNEG,
                        "surface_density": _POS,
                        "flight_height": {"type": ["number", "null"]},
                    }
                ),
                "maze": _obj(
                    {
                        "grid": {"type": "array", "items": {"type": "string", "pattern": "^[#.]+$"}, "minItems": 1},
                        "cell_size": _POS,
                        "wall_height": _POS,
                        "box_fill_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                        "seed": {"type": "integer", "minimum": 0},
                        "start_cell": {"type": ["array", "null"], "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                        "goal_cell": {"type": ["array", "null"], "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                        "box_size_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "surface_density": _POS,
                    },
                    required=("grid",),
                ),
            },
            required=("kind",),
        ),
        "guide_path": _obj({"enabled": {"type": "boolean"}, "voxel": _POS, "margin": _NONNEG}),
        "goal": _obj({"position": {"oneOf": [_VEC3, {"type": "null"}]}, "radius": _POS}),
        "analysis": _obj(
            {
                "mode": {"enum": ["pooled", "per_method"]},
                "kind": {"enum": ["pearson", "spearman"]},
                "last_column": {"enum": ["progress", "computation_time"]},
            }
        ),
        "io": _obj(
            {
                "scene": {"type": "string"},
                "path": {"type": "string"},
                "log": {"type": "string"},
                "runs": {"type": "string"},
                "out": {"type": "string"},
            }
        ),
        "output": _obj({"format": {"enum": ["json", "csv", None]}}),
    }
)

DEFAULTS = {
    "sensor": {
        "sensing_range": 10.0,
        "drone_radius": 0.25,
        "fov_horizontal_deg": 90.0,
        "fov_vertical_deg": 60.0,
        "fov_sectors": 9,
        "sector_weights": None,
    },
    "corridor": {
        "K": 100,
        "sigma": 1.0,
        "k1": 1.0,
        "k2": 1.0,
        "k3": 1.0,
        "k4": 1.0,
        "min_radius": 0.05,
        "max_spheres": 10000,
        "rng_seed": 0,
        "max_radius": None,
    },
    "vo": {"n_samples": None, "spacing": 0.5, "max_range": None},
    "guide_path": {"enabled": True, "voxel": 0.2, "margin": 0.25},
    "goal": {"position": None, "radius": 1.5},
    "analysis": {"mode": "pooled", "kind": "pearson", "last_column": "progress"},
    "output": {"format": None},
}


@dataclass
class RunConfig:
    sensor: SensorConfig
    corridor: CorridorConfig
    vo: VoSamplingConfig
    scene: Optional[dict]
    guide_path: dict
    goal: dict
    analysis: dict
    output_format: Optional[str]  # None: each command's own default
    io: dict = field(default_factory=dict)
    effective: dict = field(default_factory=dict)

    def forest_spec(self) -> ForestSpec:
        raw = dict((self.scene or {}).get("forest", {}))
        for key in ("area", "trunk_radius_range"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return ForestSpec(**raw)

    def maze_spec(self) -> MazeSpec:
        raw = dict((self.scene or {}).get("maze", {}))
        for key in ("start_cell", "goal_cell"):
            if raw.get(key) is not None:
                raw[key] = tuple(raw[key])
        return MazeSpec(**raw)

    def provenance(self) -> dict:
        """Effective configuration without I/O paths."""
        return {k: v for k, v in self.effective.items() if k != "io"}


def _merge(defaults: dict, user: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}", path=where)


def build_config(raw: Optional[dict] = None, base_dir: Optional[Path] = None) -> RunConfig:
    raw = raw or {}
    validate(raw)
    eff = _merge(DEFAULTS, raw)
    s = eff["sensor"]
    try:
        sensor = SensorConfig(
            sensing_range=float(s["sensing_range"]),
            drone_radius=float(s["drone_radius"]),
            fov_horizontal=math.radians(s["fov_horizontal_deg"]),
            fov_vertical=math.radians(s["fov_vertical_deg"]),
            fov_sectors=int(s["fov_sectors"]),
            sector_weights=None if s["sector_weights"] is None else tuple(s["sector_weights"]),
        )
        if len(sensor.sector_weights) != sensor.fov_sectors:
            raise ConfigError(
                f"sensor.sector_weights has {len(sensor.sector_weights)} entries for {sensor.fov_sectors} sectors"
            )
        # provenance lists the weights actually used, not the null default
        s["sector_weights"] = [float(w) for w in sensor.sector_weights]
        corridor = CorridorConfig(**eff["corridor"])
        v = eff["vo"]
        if v["n_samples"] is not None and "spacing" not in raw.get("vo", {}):
            v["spacing"] = None
        vo = VoSamplingConfig(
            n_samples=v["n_samples"],
            spacing=v["spacing"],
            max_range=math.inf if v["max_range"] is None else float(v["max_range"]),
        )
    except ConfigError:
        raise
    except FlightDiffError as exc:
        raise ConfigError(str(exc)) from exc
    io_paths = {}
    for key, val in eff.get("io", {}).items():
        p = Path(val)
        io_paths[key] = p if p.is_absolute() or base_dir is None else base_dir / p
    return RunConfig(
        sensor=sensor,
        corridor=corridor,
        vo=vo,
        scene=eff.get("scene"),
        guide_path=eff["guide_path"],
        goal=eff["goal"],
        analysis=eff["analysis"],
        output_format=eff["output"]["format"],
        io=io_paths,
        effective=eff,
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {p}", path=str(p)) from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON: {exc}", path=str(p)) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return build_config(raw, p.parent)
