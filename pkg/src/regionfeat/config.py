"""Flat key = value configuration shared by the command line tools.

A config file holds one ``key = value`` pair per line with ``#`` comments;
command line flags override file values, which override the built-in
defaults below. A few keys accept the literal ``auto``: the alpha weights
(resolved per descriptor family), the CLAHE clip limit, and the MSER area
cap (resolved from the image size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .imaging import EnhanceParams
from .mser import MserParams

__all__ = ["ToolConfig", "dump_config", "parse_config_file", "build_config"]

_AUTO_KEYS = {"alpha1", "alpha2", "clahe_clip_limit", "mser_max_area"}


@dataclass
class ToolConfig:
    """Every tunable knob of the toolkit, flattened for config files."""

    ratio: float = 0.8
    alpha1: float | None = None
    alpha2: float | None = None
    simulation: bool = True
    theta_deg: float = 45.0
    clahe_tile_rows: int = 8
    clahe_tile_cols: int = 8
    clahe_clip_limit: int | None = None
    bilateral_window: int = 9
    bilateral_sigma_d: float = 3.0
    bilateral_sigma_r: float = 25.0
    mser_delta: int = 5
    mser_max_variation: float = 0.25
    mser_min_area: int = 60
    mser_max_area: int | None = None
    mser_merge_overlap: float = 0.6
    ransac_iterations: int = 2000
    ransac_seed: int = 42
    f_threshold: float = 5e-4
    pose_interval: int = 1
    jobs: int = 1

    @property
    def theta(self) -> float:
        return math.radians(self.theta_deg)

    def enhance_params(self) -> EnhanceParams:
        return EnhanceParams(
            tile_rows=self.clahe_tile_rows,
            tile_cols=self.clahe_tile_cols,
            clip_limit=self.clahe_clip_limit,
            window=self.bilateral_window,
            sigma_d=self.bilateral_sigma_d,
            sigma_r=self.bilateral_sigma_r,
        )

    def mser_params(self) -> MserParams:
        return MserParams(
            delta=self.mser_delta,
            max_variation=self.mser_max_variation,
            min_area=self.mser_min_area,
            max_area=self.mser_max_area,
            merge_overlap=self.mser_merge_overlap,
        )


_FIELD_TYPES: dict[str, type] = {}
for _f in fields(ToolConfig):
    base = _f.type.split(" | ")[0] if isinstance(_f.type, str) else _f.type
    _FIELD_TYPES[_f.name] = {"float": float, "int": int, "bool": bool}.get(str(base), float)


def _parse_value(key: str, raw: str) -> Any:
    raw = raw.strip()
    if key in _AUTO_KEYS and raw.lower() == "auto":
        return None
    kind = _FIELD_TYPES[key]
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"{key} expects a boolean, got {raw!r}")
    try:
        if kind is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key} expects a {kind.__name__}, got {raw!r}")


def _format_value(key: str, value: Any) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def dump_config(cfg: ToolConfig | None = None) -> str:
    """Render a config (defaults when None) in file form, stable key order."""
    cfg = cfg or ToolConfig()
    lines = [f"{f.name} = {_format_value(f.name, getattr(cfg, f.name))}" for f in fields(ToolConfig)]
    return "\n".join(lines) + "\n"


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a config file into typed overrides.

    Raises ConfigurationError for unknown keys, missing separators or
    untypable values; the message carries the line number.
    """
    out: dict[str, Any] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _parse_value(key, raw)
        except ConfigurationError as exc:
            raise ConfigurationError(f"line {lineno}: {exc}")
    return out


def build_config(file: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ToolConfig:
    """Layer defaults, an optional config file, and explicit overrides."""
    cfg = ToolConfig()
    merged: dict[str, Any] = {}
    if file is not None:
        merged.update(parse_config_file(file))
    merged.update(overrides or {})
    for key, value in merged.items():
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg
