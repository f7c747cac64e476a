"""Flat ``key = value`` configuration files and the shipped presets."""

from __future__ import annotations

from dataclasses import fields
from importlib import resources
from pathlib import Path

from .control import StanleyGains, VelocityLimits
from .errors import ConfigParseError, InvalidParams, UnknownKey
from .ftg import FtgParams

GAIN_KEYS = ("k_ang", "k_dist", "k_soft", "k_damp", "k_rate", "k_steer", "L_max", "kappa_norm")
LIMIT_KEYS = ("v_min", "v_max", "a_x_max", "a_x_min", "a_y_max", "da_min", "da_max")
CONTROLLER_KEYS = GAIN_KEYS + LIMIT_KEYS
FTG_KEYS = tuple(f.name for f in fields(FtgParams))
PRESET_NAMES = ("base", "optimal", "ftg")


def parse_pairs(text: str, source: str = "<config>") -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigParseError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key in out:
            raise ConfigParseError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ConfigParseError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    return out


def _check_keys(values: dict, expected: tuple[str, ...], source: str) -> None:
    missing = [k for k in expected if k not in values]
    extra = [k for k in values if k not in expected]
    if missing or extra:
        raise ConfigParseError(f"{source}: missing keys {missing}, unknown keys {extra}")


def preset_path(name: str) -> Path:
    if name not in PRESET_NAMES:
        raise ConfigParseError(f"no preset named {name!r}")
    return Path(str(resources.files("localrace") / "presets" / f"{name}.cfg"))


def resolve_config_path(path_or_name) -> Path:
    """A filesystem path, or the bare name of a shipped preset."""
    p = Path(path_or_name)
    if p.exists() or str(path_or_name) not in PRESET_NAMES:
        return p
    return preset_path(str(path_or_name))


def read_pairs(path) -> dict[str, float]:
    path = resolve_config_path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    return parse_pairs(text, str(path))


def controller_from_pairs(values: dict, source: str = "<config>") -> tuple[StanleyGains, VelocityLimits]:
    _check_keys(values, CONTROLLER_KEYS, source)
    try:
        gains = StanleyGains(**{k: float(values[k]) for k in GAIN_KEYS})
        limits = VelocityLimits(**{k: float(values[k]) for k in LIMIT_KEYS})
    except InvalidParams as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc
    return gains, limits


def load_controller_config(path) -> tuple[StanleyGains, VelocityLimits]:
    return controller_from_pairs(read_pairs(path), str(path))


def ftg_from_pairs(values: dict, source: str = "<config>") -> FtgParams:
    _check_keys(values, FTG_KEYS, source)
    n = values["min_gap_width"]
    if n != int(n):
        raise ConfigParseError(f"{source}: min_gap_width must be an integer")
    try:
        return FtgParams(**{k: (int(values[k]) if k == "min_gap_width" else float(values[k])) for k in FTG_KEYS})
    except InvalidParams as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc


def load_ftg_config(path) -> FtgParams:
    return ftg_from_pairs(read_pairs(path), str(path))


def apply_overrides(values: dict, overrides: dict) -> dict:
    unknown = [k for k in overrides if k not in values]
    if unknown:
        raise UnknownKey(f"unknown config keys: {unknown}")
    merged = dict(values)
    merged.update({k: float(v) for k, v in overrides.items()})
    return merged


def format_pairs(values: dict) -> str:
    return "".join(f"{k} = {values[k]!r}\n" for k in values)


def parse_grid(text: str, source: str = "<grid>") -> list[dict[str, float]]:
    """One override set per non-empty line, written as ``key=value`` tokens.

    A line holding only ``-`` is an empty override set (the base config).
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "-":
            rows.append({})
            continue
        row: dict[str, float] = {}
        for token in line.replace(",", " ").split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ConfigParseError(f"{source}:{lineno}: expected key=value, got {token!r}")
            try:
                row[key.strip()] = float(value)
            except ValueError:
                raise ConfigParseError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
        rows.append(row)
    return rows


def read_grid(path) -> list[dict[str, float]]:
    p = Path(path)
    if not p.exists() and str(path) == "tuning_arc":
        p = Path(str(resources.files("localrace") / "presets" / "tuning_arc.txt"))
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read grid {path}: {exc}") from exc
    return parse_grid(text, str(p))

