"""Runtime configuration: defaults, config files, environment override.

Config files are plain "key = value" lines with # comments.  Precedence is
defaults < file named by HOROLAB_CONFIG < file passed explicitly < direct
flag overrides, applied in that order by the command-line layer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields


@dataclass
class Config:
    preset: str = "bolza"
    ode_steps: int = 400
    shoot_restarts: int = 8
    max_ball_size: int = 1_000_000
    tol_eq: float = 1e-9
    tol_det: float = 1e-12
    ode_tol: float = 1e-8
    xcheck_tol: float = 1e-6
    seed: int = 7


# external dotted names to attribute names
KEY_MAP = {
    "group.preset": "preset",
    "metric.ode_steps": "ode_steps",
    "metric.shoot_restarts": "shoot_restarts",
    "enum.max_ball_size": "max_ball_size",
    "tol.eq": "tol_eq",
    "tol.det": "tol_det",
    "tol.ode": "ode_tol",
    "tol.xcheck": "xcheck_tol",
    "seeds.default": "seed",
}

_ATTR_TO_KEY = {v: k for k, v in KEY_MAP.items()}

_TYPES = {f.name: f.type for f in fields(Config)}


def _parse_value(attr: str, raw: str):
    kind = _TYPES[attr]
    if kind == "int":
        return int(raw.replace("_", ""))
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str, base: Config | None = None) -> Config:
    cfg = Config(**vars(base)) if base is not None else Config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEY_MAP:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        attr = KEY_MAP[key]
        setattr(cfg, attr, _parse_value(attr, raw))
    return cfg


def load_config_file(path: str, base: Config | None = None) -> Config:
    with open(path) as fh:
        return parse_config_text(fh.read(), base=base)


def dump_config(cfg: Config) -> str:
    lines = []
    for f in fields(Config):
        lines.append(f"{_ATTR_TO_KEY[f.name]} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"


def resolve_config(explicit_path: str | None = None) -> Config:
    """Defaults, then HOROLAB_CONFIG if set, then the explicit file."""
    cfg = Config()
    env_path = os.environ.get("HOROLAB_CONFIG")
    if env_path:
        cfg = load_config_file(env_path, base=cfg)
    if explicit_path:
        cfg = load_config_file(explicit_path, base=cfg)
    return cfg
