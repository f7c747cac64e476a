"""Closed-loop sessions, lap timing, traces and parameter sweeps."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import (
    apply_overrides,
    controller_from_pairs,
    ftg_from_pairs,
    preset_path,
    read_pairs,
)
from .control import ControllerConfig, ControllerMemory, control_step
from .errors import InvalidParams, ScanLogError
from .ftg import follow_the_gap
from .simulator import (
    ControlCommand,
    LidarScan,
    SensorConfig,
    VehicleParams,
    VehicleState,
    World,
    detect_lap,
    step_vehicle,
)
from .tracks import load_track

CONTROL_RATE = 40.0
SUBSTEPS = 10
TRACE_HEADER = "t,x,y,psi,v,delta,delta_target,v_target,lap,collision"
# scan noise seeds are spread per session so neighbouring seeds share no draws
SEED_STRIDE = 1_000_003


@dataclass(frozen=True)
class SessionConfig:
    track_path: str
    controller: str = "stanley"
    config_path: str | None = None
    laps: int = 1
    seed: int = 0
    timeout: float = 300.0
    trace_path: str | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.controller not in ("stanley", "ftg"):
            raise InvalidParams(f"controller must be 'stanley' or 'ftg', got {self.controller!r}")
        if self.laps < 1:
            raise InvalidParams("laps must be >= 1")
        if not self.timeout > 0:
            raise InvalidParams("timeout must be positive")


@dataclass
class LapReport:
    lap_times: list[float]
    collisions: int
    completed: bool
    avg_speed: float
    total_distance: float
    sim_time: float = 0.0
    degraded_steps: int = 0

    @property
    def steady_lap_times(self) -> list[float]:
        """Laps after the first; the standing start only affects lap one."""
        return self.lap_times[1:] if len(self.lap_times) > 1 else list(self.lap_times)

    @property
    def mean_lap_time(self) -> float:
        laps = self.steady_lap_times
        return sum(laps) / len(laps) if laps else math.nan


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _make_controller(cfg: SessionConfig, vehicle: VehicleParams, sensor: SensorConfig):
    path = cfg.config_path or preset_path("ftg" if cfg.controller == "ftg" else "base")
    values = apply_overrides(read_pairs(path), cfg.overrides)
    if cfg.controller == "ftg":
        params = ftg_from_pairs(values, str(path))

        def step(state, scan, memory):
            return follow_the_gap(scan, params, vehicle.delta_max), memory

        return step, None

    gains, limits = controller_from_pairs(values, str(path))
    config = ControllerConfig(gains=gains, limits=limits, vehicle=vehicle, sensor=sensor)

    def step(state, scan, memory):
        return control_step(state, scan, memory, config)

    return step, ControllerMemory()


def run_session(
    cfg: SessionConfig,
    vehicle: VehicleParams | None = None,
    sensor: SensorConfig | None = None,
    on_scan=None,
) -> LapReport:
    """Drive ``cfg.laps`` laps (or until a collision or the simulated timeout).

    ``on_scan(step, scan)`` is called with every scan before the controller sees it.
    """
    vehicle = vehicle or VehicleParams()
    sensor = sensor or SensorConfig()
    track = load_track(cfg.track_path)
    world = World(track)
    step_fn, memory = _make_controller(cfg, vehicle, sensor)

    dt = 1.0 / CONTROL_RATE
    h = dt / SUBSTEPS
    state = VehicleState(pose=track.start_pose(), v=0.0, yaw_rate=0.0, delta_measured=0.0, t=0.0)
    lap_times: list[float] = []
    lap_start = 0.0
    distance = 0.0
    distance_at_finish = 0.0
    collisions = 0
    degraded = 0
    rows = [TRACE_HEADER]
    n_steps = int(math.ceil(cfg.timeout * CONTROL_RATE - 1e-9))

    for k in range(n_steps):
        scan = world.scan(state, sensor, cfg.seed * SEED_STRIDE + k)
        if on_scan is not None:
            on_scan(k, scan)
        cmd, memory = step_fn(state, scan, memory)
        if memory is not None and memory.status == "degraded":
            degraded += 1
        cmd = ControlCommand(float(cmd.delta_target), float(cmd.v_target))
        t0 = k * dt
        for j in range(SUBSTEPS):
            prev = state
            state = step_vehicle(prev, cmd, vehicle, h)
            # substep times from the step counter so rounding cannot drift
            ta, tb = t0 + j * h, t0 + (j + 1) * h
            state = VehicleState(state.pose, state.v, state.yaw_rate, state.delta_measured, tb)
            seg = math.hypot(state.pose.x - prev.pose.x, state.pose.y - prev.pose.y)
            event = detect_lap(track, prev.pose, state.pose, ta, tb)
            if event is not None and len(lap_times) < cfg.laps:
                lap_times.append(event.time - lap_start)
                lap_start = event.time
                distance_at_finish = distance + event.fraction * seg
            distance += seg
        hit = world.collides(state, vehicle)
        rows.append(
            ",".join(
                (
                    _fmt(state.t),
                    _fmt(state.pose.x),
                    _fmt(state.pose.y),
                    _fmt(state.pose.psi),
                    _fmt(state.v),
                    _fmt(state.delta_measured),
                    _fmt(cmd.delta_target),
                    _fmt(cmd.v_target),
                    str(len(lap_times)),
                    "1" if hit else "0",
                )
            )
        )
        if hit:
            collisions = 1
            break
        if len(lap_times) >= cfg.laps:
            break

    completed = collisions == 0 and len(lap_times) >= cfg.laps
    if completed:
        total_time = sum(lap_times)
        total_distance = distance_at_finish
    else:
        total_time = state.t
        total_distance = distance
    report = LapReport(
        lap_times=lap_times,
        collisions=collisions,
        completed=completed,
        avg_speed=total_distance / total_time if total_time > 0 else 0.0,
        total_distance=total_distance,
        sim_time=state.t,
        degraded_steps=degraded,
    )
    if cfg.trace_path:
        Path(cfg.trace_path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return report


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepRow:
    setting_id: int
    values: dict
    report: LapReport


def _sweep_one(args) -> LapReport:
    return run_session(args)


def run_sweep(
    base_cfg,
    overrides: list[dict],
    track,
    laps: int,
    seed: int,
    controller: str = "stanley",
    timeout: float = 300.0,
    parallel: bool = False,
) -> list[SweepRow]:
    """One session per override set, all with the same seed, in the given order."""
    base_values = read_pairs(base_cfg)
    merged = [apply_overrides(base_values, o) for o in overrides]
    sessions = [
        SessionConfig(str(track), controller, str(base_cfg), laps, seed, timeout, None, dict(o)) for o in overrides
    ]
    if parallel and len(sessions) > 1:
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_sweep_one, sessions))
    else:
        reports = [run_session(s) for s in sessions]
    return [SweepRow(i, m, r) for i, (m, r) in enumerate(zip(merged, reports))]


def changed_keys(overrides: list[dict]) -> list[str]:
    keys: list[str] = []
    for o in overrides:
        keys.extend(k for k in o if k not in keys)
    return keys


def sweep_table(rows: list[SweepRow], keys: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting_id", *keys, "mean_lap_time", "collisions", "completed"])
    for row in rows:
        r = row.report
        w.writerow(
            [
                row.setting_id,
                *(repr(float(row.values[k])) for k in keys),
                _fmt(r.mean_lap_time) if r.lap_times else "nan",
                r.collisions,
                "true" if r.completed else "false",
            ]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Scan logs


def write_scan_csv(scan: LidarScan, path) -> None:
    lines = ["angle,range"]
    lines.extend(f"{a:.9f},{r:.9f}" for a, r in zip(scan.angles, scan.ranges))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scan_csv(path, max_range: float = SensorConfig().max_range) -> LidarScan:
    """Scan from an ``angle,range`` file; ranges beyond ``max_range`` are no-returns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["angle", "range"]:
                raise ScanLogError(f"{path}: header must be 'angle,range'")
            rows = [(float(a), float(r)) for a, r in reader]
    except (OSError, ValueError) as exc:
        raise ScanLogError(f"cannot read scan {path}: {exc}") from exc
    if len(rows) < 2:
        raise ScanLogError(f"{path}: need at least two beams")
    angles = np.array([a for a, _ in rows])
    ranges = np.array([r for _, r in rows])
    inc = float(np.mean(np.diff(angles)))
    if not inc > 0 or np.max(np.abs(np.diff(angles) - inc)) > 1e-6:
        raise ScanLogError(f"{path}: beam angles must be increasing and evenly spaced")
    return LidarScan(float(angles[0]), inc, ranges, max_range)
