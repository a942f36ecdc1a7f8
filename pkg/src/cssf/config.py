"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment.  Preset parameters use
dotted keys (``preset.R = 1.5``).  Command-line ``--set key=value``
overrides are applied on top of the file with the same parser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .presets import DEFAULTS

FORMATS = frozenset({"csv", "json", "svg"})


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "ellipse"
    preset_params: dict = field(default_factory=dict)
    pair: str = "huisken"
    frame: str = "rescaled"
    n_nodes: int = 256
    t_end: float = 0.1
    dt_safety: float = 0.2
    snapshot_every: int = 10
    resample_every: int = 0
    origin_shift: tuple = (0.0, 0.0, 0.0)
    output_dir: str = "cssf_out"
    formats: frozenset = frozenset({"csv", "json"})


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _preset_value(name: str, key: str, text: str):
    default = DEFAULTS[name].get(key)
    if default is None:
        raise ConfigError(f"preset {name} has no parameter {key!r}")
    if isinstance(default, tuple):
        vec = _floats(text)
        if len(vec) != 3:
            raise ConfigError(f"preset.{key} needs three numbers")
        return vec
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"preset.{key} must be an integer") from None
    return _floats(text)[0] if "," not in text else _floats(text)


def parse_lines(lines) -> dict:
    out = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {number}: expected key = value, got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def build(raw: dict, base: RunConfig | None = None) -> RunConfig:
    """Apply string key/value pairs to ``base`` (or the defaults)."""
    cfg = base or RunConfig()
    params = dict(cfg.preset_params)
    if "preset" in raw:
        if raw["preset"] not in DEFAULTS:
            raise ConfigError(f"unknown preset {raw['preset']!r}")
        if raw["preset"] != cfg.preset:
            params = {}
        cfg.preset = raw["preset"]
    pending = {}
    for key, value in raw.items():
        try:
            if key == "preset":
                continue
            if key.startswith("preset."):
                pending[key[len("preset."):]] = value
            elif key == "pair":
                cfg.pair = value
            elif key == "frame":
                if value not in ("physical", "rescaled"):
                    raise ConfigError("frame must be physical or rescaled")
                cfg.frame = value
            elif key == "n_nodes":
                cfg.n_nodes = int(value)
            elif key in ("t_end", "tau_end"):
                cfg.t_end = float(value)
            elif key == "dt_safety":
                cfg.dt_safety = float(value)
            elif key == "snapshot_every":
                cfg.snapshot_every = int(value)
            elif key == "resample_every":
                cfg.resample_every = int(value)
            elif key == "origin_shift":
                vec = _floats(value)
                if len(vec) != 3:
                    raise ConfigError("origin_shift needs three numbers")
                cfg.origin_shift = vec
            elif key == "output_dir":
                cfg.output_dir = value
            elif key == "formats":
                fmts = frozenset(v.strip() for v in value.split(",") if v.strip())
                if not fmts <= FORMATS:
                    raise ConfigError(f"formats must be a subset of {sorted(FORMATS)}")
                cfg.formats = fmts
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    for key, value in pending.items():
        params[key] = _preset_value(cfg.preset, key, value)
    cfg.preset_params = params
    if not (math.isfinite(cfg.t_end) and cfg.t_end > 0):
        raise ConfigError("t_end must be positive")
    if cfg.dt_safety <= 0:
        raise ConfigError("dt_safety must be positive")
    return cfg


def load(path=None, overrides=()) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            raw.update(parse_lines(Path(path).read_text().splitlines()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    raw.update(parse_lines(overrides))
    return build(raw)
