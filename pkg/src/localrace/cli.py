"""Command line entry point: run, sweep, gen-track and plan-debug."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import tempfile
from pathlib import Path

from . import plotting
from .config import PRESET_NAMES, load_controller_config, read_grid
from .control import compute_lookahead, fit_velocity_profile
from .errors import PLANNER_ERRORS, LocalRaceError
from .geometry import knot_control_points, project_to_spline
from .harness import (
    SessionConfig,
    changed_keys,
    read_scan_csv,
    run_session,
    run_sweep,
    sweep_table,
    write_scan_csv,
)
from .planning import PlannerParams, WidthProfile, plan_stages
from .simulator import SensorConfig, VehicleParams
from .tracks import generate_track, load_track, save_track

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_COLLISION = 2


def _default_config(controller: str, given: str | None) -> str:
    if given:
        return given
    return "ftg" if controller == "ftg" else "base"


def _parse_params(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise LocalRaceError(f"--param expects key=value, got {item!r}")
        out[key] = float(value)
    return out


def _write_rows(rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerows(rows)


def cmd_run(args) -> int:
    scan_dir = Path(args.scan_log) if args.scan_log else None
    if scan_dir is not None:
        scan_dir.mkdir(parents=True, exist_ok=True)

    def log_scan(step, scan):
        if step % args.scan_every == 0:
            write_scan_csv(scan, scan_dir / f"scan_{step:06d}.csv")

    with tempfile.TemporaryDirectory() as tmp:
        trace_path = args.trace
        if trace_path is None and args.figure:
            trace_path = str(Path(tmp) / "trace.csv")
        cfg = SessionConfig(
            track_path=args.track,
            controller=args.controller,
            config_path=_default_config(args.controller, args.config),
            laps=args.laps,
            seed=args.seed,
            timeout=args.timeout,
            trace_path=trace_path,
        )
        report = run_session(cfg, on_scan=log_scan if scan_dir else None)
        if args.figure:
            title = f"{args.controller} {Path(cfg.config_path).stem}: " + (
                f"mean lap {report.mean_lap_time:.2f} s" if report.completed else "not completed"
            )
            plotting.plot_trajectory(load_track(args.track), plotting.read_trace(trace_path), args.figure, title)

    rows = [("key", "value"), ("completed", str(report.completed).lower()), ("collisions", report.collisions)]
    rows += [(f"lap_{i}", f"{t:.6f}") for i, t in enumerate(report.lap_times, 1)]
    rows += [
        ("mean_lap_time", f"{report.mean_lap_time:.6f}"),
        ("avg_speed", f"{report.avg_speed:.6f}"),
        ("total_distance", f"{report.total_distance:.6f}"),
        ("sim_time", f"{report.sim_time:.6f}"),
    ]
    _write_rows(rows, sys.stdout)
    if report.completed:
        return EXIT_OK
    return EXIT_COLLISION if report.collisions else EXIT_ERROR


def cmd_sweep(args) -> int:
    grid = read_grid(args.grid)
    base = _default_config(args.controller, args.config)
    rows = run_sweep(base, grid, args.track, args.laps, args.seed, args.controller, args.timeout, args.parallel)
    table = sweep_table(rows, changed_keys(grid))
    Path(args.out).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    if args.figure:
        plotting.plot_sweep(
            [r.setting_id for r in rows],
            [r.report.mean_lap_time if r.report.completed else 0.0 for r in rows],
            [r.report.completed for r in rows],
            args.figure,
        )
    return EXIT_OK


def cmd_gen_track(args) -> int:
    track = generate_track(args.kind, args.seed, _parse_params(args.param))
    save_track(track, args.out)
    if args.figure:
        plotting.plot_track(track, args.figure)
    _write_rows(
        [("key", "value"), ("name", track.name), ("length", f"{track.length:.6f}"), ("vertices", len(track.centerline))],
        sys.stdout,
    )
    return EXIT_OK


def _stage_rows(stages) -> list[tuple]:
    rows = [("stage", "index", "x", "y")]

    def add(name, pts):
        rows.extend((name, i, f"{x:.6f}", f"{y:.6f}") for i, (x, y) in enumerate(pts))

    add("scan", stages.points)
    for k, seg in enumerate(stages.segments):
        add(f"segment_{k}", seg.points)
    if stages.walls.left is not None:
        add("left_wall", stages.walls.left.points)
    if stages.walls.right is not None:
        add("right_wall", stages.walls.right.points)
    add("centerline", stages.centerline.points)
    add("smoothed", stages.smoothed)
    add("simplified", stages.simplified)
    add("spline", plotting.sample_spline(stages.spline, 0.05))
    return rows


def cmd_plan_debug(args) -> int:
    gains, limits = load_controller_config(args.config)
    params = PlannerParams()
    vehicle, sensor = VehicleParams(), SensorConfig()
    scans = sorted(Path(args.scan_log).glob("*.csv"))
    if not scans:
        raise LocalRaceError(f"no scan files in {args.scan_log}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = WidthProfile.empty()
    summary = [("scan", "status", "n_points", "n_segments", "width", "spline_length", "lookahead_x", "lookahead_y")]
    for path in scans:
        scan = read_scan_csv(path, args.max_range)
        try:
            stages = plan_stages(scan, width, params)
        except PLANNER_ERRORS as exc:
            summary.append((path.stem, type(exc).__name__, "", "", f"{width.last_valid:.6f}", "", "", ""))
            continue
        width = stages.width
        with open(out / f"{path.stem}_stages.csv", "w", newline="", encoding="utf-8") as fh:
            _write_rows(_stage_rows(stages), fh)
        knots = knot_control_points(stages.spline)
        profile = fit_velocity_profile(knots, limits.v_min, limits)
        prof_rows = [("index", "s", "kappa", "v")]
        prof_rows += [(i, f"{p.s:.6f}", f"{p.kappa:.6f}", f"{v:.6f}") for i, (p, v) in enumerate(zip(knots, profile.v))]
        with open(out / f"{path.stem}_profile.csv", "w", newline="", encoding="utf-8") as fh:
            _write_rows(prof_rows, fh)
        # control point as seen from the front axle, expressed in the sensor frame
        axle = (vehicle.wheelbase - sensor.mount_offset.x, -sensor.mount_offset.y)
        cp = compute_lookahead(stages.spline, project_to_spline(stages.spline, axle), gains)
        summary.append(
            (
                path.stem,
                "ok",
                len(stages.points),
                len(stages.segments),
                f"{width.last_valid:.6f}",
                f"{stages.spline.total_length:.6f}",
                f"{cp.position.x:.6f}",
                f"{cp.position.y:.6f}",
            )
        )
        if args.figures:
            plotting.plot_plan_stages(stages, out / f"{path.stem}.png")
            plotting.plot_width_profile(width, out / f"{path.stem}_width.png")
    buf = io.StringIO()
    _write_rows(summary, buf)
    (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localrace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    presets = ", ".join(PRESET_NAMES)

    p = sub.add_parser("run", help="drive a closed-loop session")
    p.add_argument("--track", required=True)
    p.add_argument("--controller", choices=("stanley", "ftg"), default="stanley")
    p.add_argument("--config", help=f"config file or preset name ({presets})")
    p.add_argument("--laps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=300.0, help="simulated seconds")
    p.add_argument("--trace")
    p.add_argument("--figure", help="write a trajectory plot here")
    p.add_argument("--scan-log", help="directory receiving angle,range scan files")
    p.add_argument("--scan-every", type=int, default=40, help="log every n-th scan")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one session per override line of a grid file")
    p.add_argument("--track", required=True)
    p.add_argument("--config", help=f"base config file or preset name ({presets})")
    p.add_argument("--grid", required=True, help="grid file, or 'tuning_arc' for the shipped arc")
    p.add_argument("--out", required=True)
    p.add_argument("--controller", choices=("stanley", "ftg"), default="stanley")
    p.add_argument("--laps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--figure", help="write a lap-time bar chart here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-track", help="write a procedural track file")
    p.add_argument("--kind", required=True, choices=("corridor", "slalom", "paper_like", "random"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_gen_track)

    p = sub.add_parser("plan-debug", help="dump every planning stage for logged scans")
    p.add_argument("--scan-log", required=True)
    p.add_argument("--config", default="base")
    p.add_argument("--out", required=True)
    p.add_argument("--max-range", type=float, default=30.0)
    p.add_argument("--figures", action="store_true", help="also render stage and width plots")
    p.set_defaults(func=cmd_plan_debug)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "laps", 1) < 1:
        print("error: --laps must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (LocalRaceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
