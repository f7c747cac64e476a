"""Figures for traces, sweeps and planner debugging (Agg backend, files only)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .geometry import PathSpline
from .simulator import Track, build_walls

WALL_STYLE = dict(color="0.2", lw=1.0)


def read_trace(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def _save(fig: Figure, out) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, bbox_inches="tight")
    return out


def _draw_track(ax, track: Track) -> None:
    left, right = build_walls(track)
    for wall in (left, right):
        closed = np.vstack((wall, wall[:1]))
        ax.plot(closed[:, 0], closed[:, 1], **WALL_STYLE)
    c = np.vstack((track.centerline, track.centerline[:1]))
    ax.plot(c[:, 0], c[:, 1], color="0.6", lw=0.8, ls="--")
    start = track.centerline[track.start_index]
    ax.plot(*start, marker="o", color="k", ms=4)


def plot_track(track: Track, out) -> Path:
    fig = Figure(figsize=(7, 6))
    ax = fig.add_subplot()
    _draw_track(ax, track)
    ax.set_aspect("equal")
    ax.set_title(f"{track.name}: {track.length:.1f} m")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    return _save(fig, out)


def plot_trajectory(track: Track, trace: dict, out, title: str = "") -> Path:
    """Driven path coloured by speed; a cross marks a collision."""
    fig = Figure(figsize=(8, 6.5))
    ax = fig.add_subplot()
    _draw_track(ax, track)
    if trace:
        sc = ax.scatter(trace["x"], trace["y"], c=trace["v"], s=3, cmap="viridis")
        fig.colorbar(sc, ax=ax, label="speed [m/s]")
        hit = trace["collision"] > 0
        if np.any(hit):
            ax.plot(trace["x"][hit], trace["y"][hit], "rx", ms=10, mew=2)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title)
    return _save(fig, out)


def plot_sweep(setting_ids, lap_times, completed, out) -> Path:
    """Mean lap time per setting; settings that did not finish are hatched at zero."""
    ids = np.asarray(setting_ids)
    times = np.asarray(lap_times, dtype=float)
    done = np.asarray(completed, dtype=bool)
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.bar(ids[done], times[done], color="tab:blue")
    if np.any(~done):
        ax.bar(ids[~done], np.zeros(np.count_nonzero(~done)), hatch="//", edgecolor="tab:red")
        for i in ids[~done]:
            ax.annotate("crash", (i, 0), ha="center", va="bottom", color="tab:red")
    ax.set_xticks(ids)
    ax.set_xlabel("setting")
    ax.set_ylabel("mean lap time [s]")
    return _save(fig, out)


def plot_plan_stages(stages, out, spline_step: float = 0.05) -> Path:
    """Scan points, wall segments, chosen walls and every path stage in the vehicle frame."""
    fig = Figure(figsize=(7, 7))
    ax = fig.add_subplot()
    ax.plot(stages.points[:, 0], stages.points[:, 1], ".", color="0.75", ms=2, label="scan")
    for seg in stages.segments:
        ax.plot(seg.points[:, 0], seg.points[:, 1], lw=0.8, alpha=0.6)
    if stages.walls.left is not None:
        ax.plot(*stages.walls.left.points.T, color="tab:blue", lw=2, label="left wall")
    if stages.walls.right is not None:
        ax.plot(*stages.walls.right.points.T, color="tab:red", lw=2, label="right wall")
    ax.plot(*stages.centerline.points.T, "o", color="tab:green", ms=3, label="centerline")
    ax.plot(*stages.smoothed.T, color="tab:olive", lw=1, label="smoothed")
    ax.plot(*stages.simplified.T, "s", color="tab:purple", ms=4, label="simplified")
    sp = sample_spline(stages.spline, spline_step)
    ax.plot(sp[:, 0], sp[:, 1], color="k", lw=1.2, label="spline")
    ax.plot(0, 0, marker=(3, 0, -90), color="k", ms=10)
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=7)
    ax.set_xlabel("forward [m]")
    ax.set_ylabel("left [m]")
    return _save(fig, out)


def plot_width_profile(width, out) -> Path:
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    if len(width.s_along):
        ok = width.valid
        ax.plot(width.s_along[ok], width.width[ok], ".", ms=3, color="0.5", label="paired")
        ax.plot(width.s_along[~ok], width.width[~ok], "x", ms=3, color="tab:red", label="rejected")
        ax.plot(width.s_along, width.smoothed, color="tab:blue", label="smoothed")
    ax.axhline(width.last_valid, color="k", ls=":", lw=0.8, label="carried")
    ax.set_xlabel("distance along wall [m]")
    ax.set_ylabel("width [m]")
    ax.legend(fontsize=7)
    return _save(fig, out)


def sample_spline(spline: PathSpline, step: float) -> np.ndarray:
    n = max(int(np.ceil(spline.total_length / step)), 1) + 1
    return spline.positions(np.linspace(0.0, spline.total_length, n))
