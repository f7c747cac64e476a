"""Track files and procedural track layouts."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidParams, SelfIntersectingWalls, TrackParseError
from .geometry import resample_polyline
from .simulator import Track, VehicleParams, build_walls

VERTEX_SPACING = 0.2
PAPER_LIKE_WIDTH_FACTOR = 7.0

# Hand-laid F1Tenth-style circuit: a main straight, a hairpin, a chicane and
# a run of sweepers; corners of roughly 2.5-4 m radius.
PAPER_LIKE_CONTROL_POINTS = [
    (0.0, 0.0),
    (6.0, 0.0),
    (12.0, 0.0),
    (15.5, 1.2),
    (16.8, 4.2),
    (15.0, 7.0),
    (11.8, 7.6),
    (9.6, 9.6),
    (10.0, 12.8),
    (8.0, 15.6),
    (4.4, 15.8),
    (1.8, 13.8),
    (-1.2, 12.4),
    (-4.4, 13.2),
    (-7.4, 12.0),
    (-8.4, 8.6),
    (-7.0, 5.0),
    (-4.6, 1.6),
]


def periodic_spline(control: np.ndarray, spacing: float = VERTEX_SPACING) -> np.ndarray:
    """Sample a closed C2 cubic through ``control`` at roughly constant spacing."""
    p = np.asarray(control, dtype=float)
    n = len(p)
    nxt = np.roll(p, -1, axis=0)
    h = np.hypot(*(nxt - p).T)
    if np.any(h <= 1e-9):
        raise InvalidParams("duplicate control points")
    h_prev = np.roll(h, 1)
    a = np.zeros((n, n))
    idx = np.arange(n)
    a[idx, (idx - 1) % n] = h_prev
    a[idx, idx] = 2.0 * (h_prev + h)
    a[idx, (idx + 1) % n] = h
    slope = (nxt - p) / h[:, None]
    rhs = 6.0 * (slope - np.roll(slope, 1, axis=0))
    m = np.linalg.solve(a, rhs)
    m_next = np.roll(m, -1, axis=0)

    dense = []
    for i in range(n):
        k = max(int(math.ceil(h[i] / (spacing / 4.0))), 2)
        u = np.linspace(0.0, h[i], k, endpoint=False)[:, None]
        b = slope[i] - h[i] * (2.0 * m[i] + m_next[i]) / 6.0
        seg = p[i] + b * u + (m[i] / 2.0) * u**2 + ((m_next[i] - m[i]) / (6.0 * h[i])) * u**3
        dense.append(seg)
    dense = np.vstack(dense + [p[:1]])
    out = resample_polyline(dense, spacing)
    return out[:-1] if np.hypot(*(out[-1] - out[0])) < spacing / 2 else out


def _stadium(straight: float, radius: float, spacing: float) -> np.ndarray:
    pieces = []
    n_s = max(int(round(straight / spacing)), 1)
    n_a = max(int(round(math.pi * radius / spacing)), 8)
    xs = np.linspace(0.0, straight, n_s, endpoint=False)
    pieces.append(np.column_stack((xs, np.zeros_like(xs))))
    th = np.linspace(-math.pi / 2, math.pi / 2, n_a, endpoint=False)
    pieces.append(np.column_stack((straight + radius * np.cos(th), radius + radius * np.sin(th))))
    pieces.append(np.column_stack((straight - xs, np.full_like(xs, 2 * radius))))
    th = np.linspace(math.pi / 2, 3 * math.pi / 2, n_a, endpoint=False)
    pieces.append(np.column_stack((radius * np.cos(th), radius + radius * np.sin(th))))
    return np.vstack(pieces)


def _random_control(rng: np.random.Generator, n: int, radius: float, jitter: float) -> np.ndarray:
    ang = np.sort(rng.uniform(0.0, 2 * math.pi, n))
    ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False) * 0.5 + ang * 0.5
    r = radius * (1.0 + jitter * rng.uniform(-1.0, 1.0, n))
    return np.column_stack((r * np.cos(ang), r * np.sin(ang)))


def generate_track(kind: str, seed: int = 0, params: dict | None = None) -> Track:
    """Build a closed track of the given ``kind``.

    Kinds: ``corridor`` (stadium loop), ``slalom`` (alternating bends),
    ``paper_like`` (multi-bend circuit, width seven vehicle widths) and
    ``random`` (seeded smooth loop).
    """
    params = dict(params or {})
    spacing = float(params.pop("spacing", VERTEX_SPACING))
    if kind == "corridor":
        width = float(params.pop("width", 2.0))
        straight = float(params.pop("straight_length", 10.0))
        radius = float(params.pop("radius", 3.0))
        if width <= 0 or straight <= 0 or radius <= width / 2:
            raise InvalidParams("corridor needs width > 0, straight_length > 0, radius > width/2")
        center = _stadium(straight, radius, spacing)
        name = "corridor"
    elif kind == "slalom":
        width = float(params.pop("width", 2.1))
        amplitude = float(params.pop("amplitude", 1.2))
        wavelength = float(params.pop("wavelength", 8.0))
        waves = int(params.pop("waves", 2))
        radius = float(params.pop("radius", 4.0))
        if width <= 0 or amplitude < 0 or wavelength <= 0 or waves < 1 or radius <= width / 2:
            raise InvalidParams("invalid slalom parameters")
        straight = wavelength * waves
        center = _stadium(straight, radius, spacing / 4.0)
        bottom = center[:, 1] < 1e-9
        xs = center[bottom, 0]
        # windowed so the weave meets the end bends with zero offset and slope
        center[bottom, 1] = amplitude * np.sin(2 * math.pi * xs / wavelength) * np.sin(math.pi * xs / straight) ** 2
        center = resample_polyline(np.vstack((center, center[:1])), spacing)[:-1]
        name = "slalom"
    elif kind == "paper_like":
        vehicle_width = float(params.pop("vehicle_width", VehicleParams().width))
        scale = float(params.pop("scale", 1.0))
        if vehicle_width <= 0 or scale <= 0:
            raise InvalidParams("vehicle_width and scale must be positive")
        width = PAPER_LIKE_WIDTH_FACTOR * vehicle_width
        center = periodic_spline(np.array(PAPER_LIKE_CONTROL_POINTS) * scale, spacing)
        name = "paper_like"
    elif kind == "random":
        width = float(params.pop("width", 2.1))
        radius = float(params.pop("radius", 9.0))
        n_ctrl = int(params.pop("n_control", 10))
        jitter = float(params.pop("jitter", 0.3))
        if width <= 0 or radius <= width or n_ctrl < 4 or not 0 <= jitter < 1:
            raise InvalidParams("invalid random-track parameters")
        rng = np.random.default_rng(seed)
        for _ in range(200):
            center = periodic_spline(_random_control(rng, n_ctrl, radius, jitter), spacing)
            try:
                build_walls(Track(center, width, "random", 0))
                break
            except SelfIntersectingWalls:
                continue
        else:
            raise InvalidParams("could not draw a valid random track")
        name = f"random-{seed}"
    else:
        raise InvalidParams(f"unknown track kind {kind!r}")
    if params:
        raise InvalidParams(f"unused track parameters: {sorted(params)}")
    track = Track(center, width, name, 0)
    build_walls(track)
    return track


def track_to_dict(track: Track) -> dict:
    width = track.width
    return {
        "name": track.name,
        "centerline": track.centerline.tolist(),
        "width": float(width[0]) if np.all(width == width[0]) else width.tolist(),
        "start_index": int(track.start_index),
    }


def dumps_track(track: Track) -> str:
    return json.dumps(track_to_dict(track), indent=1) + "\n"


def save_track(track: Track, path) -> None:
    Path(path).write_text(dumps_track(track), encoding="utf-8")


def track_from_dict(doc) -> Track:
    if not isinstance(doc, dict):
        raise TrackParseError("track document must be an object")
    missing = {"name", "centerline", "width", "start_index"} - set(doc)
    if missing:
        raise TrackParseError(f"track document lacks {sorted(missing)}")
    try:
        center = np.asarray(doc["centerline"], dtype=float)
        width = np.asarray(doc["width"], dtype=float)
        start = doc["start_index"]
        if not isinstance(start, int) or isinstance(start, bool):
            raise TrackParseError("start_index must be an integer")
        if center.ndim != 2 or center.shape[1] != 2:
            raise TrackParseError("centerline must be a list of [x, y] pairs")
        if width.ndim > 1 or (width.ndim == 1 and len(width) != len(center)):
            raise TrackParseError("width must be a scalar or one value per vertex")
        return Track(center, width, str(doc["name"]), start)
    except (TypeError, ValueError, InvalidParams) as exc:
        raise TrackParseError(str(exc)) from exc


def load_track(path) -> Track:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TrackParseError(f"cannot read track {path}: {exc}") from exc
    return track_from_dict(doc)
