"""Command-line entry point: ``flightdiff gen|score|eval|corr``.

Exit codes: 0 success, 1 usage, 2 input (files, parsing, config), 3 domain.
Errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import aggregate_runs, correlation_matrix, matrix_to_csv, matrix_to_svg, read_run_table
from .config import RunConfig, build_config, load_config
from .difficulty import score_test_case
from .errors import FlightDiffError, InputError
from .io import read_text, dumps, fmt, read_log, read_path, read_scene, write_points
from .scenegen import compute_guide_path, generate_forest, generate_maze
from .trajmetrics import GoalSpec, evaluate

TOOL = {"name": "flightdiff", "version": __version__}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output directory (default: stdout)")
    p.add_argument("--seed", type=int, help="override scene and corridor seeds")
    p.add_argument("--format", choices=("json", "csv"), help="output format")
    if "scene" in names:
        p.add_argument("--scene", type=Path, help="scene file (x y z lines or JSON primitives)")
    if "path" in names:
        p.add_argument("--path", type=Path, help="guide path file (x y z lines)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flightdiff", description="Quadrotor test-case difficulty and flight metrics")
    parser.add_argument("--version", action="version", version=f"flightdiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a procedural scene and guide path")
    _add_common(gen)

    score = sub.add_parser("score", help="compute TO, VO and AOL for a scene and guide path")
    _add_common(score, "scene", "path")

    ev = sub.add_parser("eval", help="evaluate trajectory logs against a scene")
    _add_common(ev, "scene", "path")
    ev.add_argument("--log", type=Path, action="append", help="trajectory CSV (repeat for several runs)")

    corr = sub.add_parser("corr", help="difficulty/performance correlation matrix")
    _add_common(corr)
    corr.add_argument("--runs", type=Path, help="run table CSV")
    corr.add_argument("--mode", choices=("pooled", "per_method"))
    corr.add_argument("--kind", choices=("pearson", "spearman"))
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else build_config({})
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        raw = json.loads(json.dumps(cfg.effective))
        raw["corridor"]["rng_seed"] = args.seed
        if raw.get("scene"):
            kind = raw["scene"]["kind"]
            raw["scene"].setdefault(kind, {})["seed"] = args.seed
        io_paths = cfg.io
        cfg = build_config(raw)
        cfg.io = io_paths
    if args.format:
        cfg.output_format = cfg.effective["output"]["format"] = args.format
    return cfg


def _input(args, cfg: RunConfig, name: str, required: bool = True) -> Optional[Path]:
    val = getattr(args, name, None) or cfg.io.get(name)
    if val is None and required:
        raise UsageError(f"--{name} is required (or set io.{name} in the config)")
    return val


def _out_dir(args, cfg: RunConfig) -> Optional[Path]:
    out = args.out or cfg.io.get("out")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    return out


def _record_csv(record: dict) -> str:
    flat = {k: v for k, v in record.items() if not isinstance(v, (dict, list))}
    head = ",".join(flat)
    vals = []
    for v in flat.values():
        if v is None:
            vals.append("")
        elif isinstance(v, bool):
            vals.append("true" if v else "false")
        elif isinstance(v, float):
            vals.append(fmt(v))
        else:
            vals.append(str(v))
    return head + "\n" + ",".join(vals) + "\n"


def _format(cfg: RunConfig, default: str) -> str:
    return cfg.output_format or default


def _emit(out: Optional[Path], name: str, record: dict, fmt_: str, cfg: RunConfig) -> None:
    text = dumps(record) if fmt_ == "json" else _record_csv(record)
    if out is None:
        sys.stdout.write(text)
        return
    (out / f"{name}.{fmt_}").write_text(text, encoding="utf-8")
    if fmt_ == "csv":
        # CSV has no room for provenance, so it goes next to the table
        meta = {"tool": TOOL, "config": cfg.provenance()}
        (out / f"{name}.meta.json").write_text(dumps(meta), encoding="utf-8")


def cmd_gen(args) -> int:
    cfg = _config(args)
    if not cfg.scene:
        raise UsageError("gen needs a 'scene' section in the config")
    out = _out_dir(args, cfg)
    if out is None:
        raise UsageError("gen writes several files; --out is required")
    kind = cfg.scene["kind"]
    generated = generate_forest(cfg.forest_spec()) if kind == "forest" else generate_maze(cfg.maze_spec())
    write_points(out / "scene.xyz", generated.scene.points)
    meta = {
        "tool": TOOL,
        "kind": kind,
        "spec": generated.meta["spec"],
        "start": generated.start,
        "goal": generated.goal,
        "n_points": len(generated.scene),
        "config": cfg.provenance(),
    }
    gp = cfg.guide_path
    if gp["enabled"]:
        path = compute_guide_path(
            generated.scene,
            generated.start,
            generated.goal,
            gp["voxel"],
            cfg.sensor.drone_radius,
            bounds=generated.bounds,
            margin=gp["margin"],
        )
        write_points(out / "path.xyz", path.waypoints)
        meta["guide_path"] = {"waypoints": len(path), "length": path.length}
    (out / "scene.meta.json").write_text(dumps(meta), encoding="utf-8")
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    scene = read_scene(_input(args, cfg, "scene"))
    path = read_path(_input(args, cfg, "path"))
    out = _out_dir(args, cfg)

    scores = score_test_case(scene, path, cfg.sensor, cfg.corridor, cfg.vo)
    corridor = scores.corridor
    record = {
        "to": scores.to,
        "vo": scores.vo,
        "aol": scores.aol,
        "n_spheres": len(corridor.spheres),
        "corridor_complete": corridor.complete,
        "path_length": path.length,
        "tool": TOOL,
        "config": cfg.provenance(),
    }
    _emit(out, "scores", record, _format(cfg, "json"), cfg)
    if out is not None:
        spheres = {"tool": TOOL, "path_length": path.length, "spheres": corridor.to_records()}
        (out / "corridor.json").write_text(dumps(spheres), encoding="utf-8")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    logs = args.log or ([cfg.io["log"]] if "log" in cfg.io else None)
    if not logs:
        raise UsageError("--log is required (or set io.log in the config)")
    path = read_path(_input(args, cfg, "path"))
    scene_file = _input(args, cfg, "scene", required=False)
    scene = read_scene(scene_file) if scene_file else None
    out = _out_dir(args, cfg)

    goal_pos = cfg.goal["position"] if cfg.goal["position"] is not None else path.waypoints[-1]
    goal = GoalSpec(tuple(goal_pos), cfg.goal["radius"])
    reports = [evaluate(read_log(p), scene, path, goal, cfg.sensor) for p in logs]
    fmt_ = _format(cfg, "json")
    if len(reports) == 1:
        record = dict(reports[0].to_dict())
    else:
        record = aggregate_runs(reports).to_dict()
        if fmt_ == "json":
            record["runs"] = [r.to_dict() for r in reports]
    if fmt_ == "json":
        record["goal"] = {"position": list(goal.goal), "radius": goal.radius}
        record["tool"] = TOOL
        record["config"] = cfg.provenance()
    _emit(out, "report", record, fmt_, cfg)
    return 0


def cmd_corr(args) -> int:
    cfg = _config(args)
    runs = _input(args, cfg, "runs")
    table = read_run_table(read_text(runs))
    # flags override the config and are recorded in the provenance
    mode = cfg.analysis["mode"] = args.mode or cfg.analysis["mode"]
    kind = cfg.analysis["kind"] = args.kind or cfg.analysis["kind"]
    matrix = correlation_matrix(table, mode=mode, kind=kind, last_column=cfg.analysis["last_column"])
    out = _out_dir(args, cfg)
    fmt_ = _format(cfg, "csv")
    if fmt_ == "json":
        values = [[float(v) if np.isfinite(v) else None for v in row] for row in matrix.values]
        text = dumps(
            {
                "rows": list(matrix.row_labels),
                "columns": list(matrix.col_labels),
                "values": values,
                "mode": mode,
                "kind": kind,
                "tool": TOOL,
                "config": cfg.provenance(),
            }
        )
    else:
        text = matrix_to_csv(matrix)
    if out is None:
        sys.stdout.write(text)
    else:
        (out / f"correlation.{fmt_}").write_text(text, encoding="utf-8")
        if fmt_ == "csv":
            meta = {"tool": TOOL, "mode": mode, "kind": kind, "config": cfg.provenance()}
            (out / "correlation.meta.json").write_text(dumps(meta), encoding="utf-8")
        title = f"|{kind} r|, {mode.replace('_', '-')}"
        (out / "correlation.svg").write_text(matrix_to_svg(matrix, title), encoding="utf-8")
    return 0


COMMANDS = {"gen": cmd_gen, "score": cmd_score, "eval": cmd_eval, "corr": cmd_corr}


def _fail(payload: dict, code: int) -> int:
    payload["exit_code"] = code
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail({"error": "UsageError", "message": str(exc)}, 1)
    except FlightDiffError as exc:
        return _fail(exc.to_dict(), exc.exit_code)
    except OSError as exc:
        return _fail(InputError(str(exc)).to_dict(), 2)


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
