"""Run configuration: flat ``key = value`` text with dotted keys.

Parsing is strict.  Unknown keys, duplicate keys, malformed values and
out-of-range numbers raise ConfigError naming the offending key.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


def _pos(x):
    return x > 0


@dataclass
class RunConfig:
    model_family: str = "round"
    model_a: float = 1.0
    model_b: float = 1.0
    grid_n: int = 64
    flow_t_end: float = 10.0
    flow_dt_store: float = 0.05
    flow_dt_safety: float = 0.8
    flow_eps: float = 0.1
    conjugate_variant: str = "both"
    conjugate_tau_T: float = 0.5
    conjugate_t_max: float = 0.6
    conjugate_states: int = 641
    mu_restarts: int = 8
    mu_tol: float = 1e-12
    mu_every: int = 10
    tubes_radii: tuple = (0.02, 0.04, 0.06, 0.08, 0.1)
    tubes_radius: float = 0.5
    tubes_mc_samples: int = 100000
    seed: int = 0
    output_dir: str = "out"
    output_svg: bool = True

    @staticmethod
    def keys() -> dict:
        return {f.name.replace("_", ".", 1) if f.name not in ("seed",) else f.name: f.name
                for f in dataclasses.fields(RunConfig)}

    def rng(self, stream: int) -> np.random.Generator:
        """Independent generator for a numbered stream of the run seed."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(stream,)))

    def to_text(self) -> str:
        lines = []
        for key, attr in self.keys().items():
            v = getattr(self, attr)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


_CHOICES = {
    "model_family": ("round", "weighted"),
    "conjugate_variant": ("F", "W", "both"),
}

_RANGES = {
    "model_a": _pos, "model_b": _pos, "grid_n": lambda n: 16 <= n <= 512,
    "flow_t_end": _pos, "flow_dt_store": _pos, "flow_dt_safety": lambda x: 0 < x <= 1,
    "flow_eps": lambda x: abs(x) < 1.0 / 3.0, "conjugate_tau_T": _pos,
    "conjugate_t_max": lambda x: 0 < x < 1, "conjugate_states": lambda n: n >= 5,
    "mu_restarts": lambda n: n >= 1, "mu_tol": _pos, "mu_every": lambda n: n >= 1,
    "tubes_radius": _pos, "tubes_mc_samples": lambda n: n >= 1000, "seed": lambda n: n >= 0,
    "tubes_radii": lambda t: len(t) >= 2 and all(x > 0 for x in t) and list(t) == sorted(t),
}


def _convert(attr: str, raw: str, default):
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("value must be finite")
        return v
    if isinstance(default, tuple):
        return tuple(float(x) for x in raw.split(",") if x.strip())
    return raw


def build_config(pairs: dict) -> RunConfig:
    keys = RunConfig.keys()
    cfg = RunConfig()
    values = {}
    for key, raw in pairs.items():
        if key not in keys:
            raise ConfigError(f"unknown key {key!r}")
        attr = keys[key]
        try:
            values[attr] = _convert(attr, str(raw), getattr(cfg, attr))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    cfg = dataclasses.replace(cfg, **values)
    for attr, choices in _CHOICES.items():
        if getattr(cfg, attr) not in choices:
            key = attr.replace("_", ".", 1)
            raise ConfigError(f"{key}: must be one of {choices}")
    for attr, ok in _RANGES.items():
        if not ok(getattr(cfg, attr)):
            key = attr if attr == "seed" else attr.replace("_", ".", 1)
            raise ConfigError(f"{key}: value {getattr(cfg, attr)!r} out of range")
    if cfg.model_family == "round" and cfg.model_a != cfg.model_b:
        raise ConfigError("model.a: the round family requires a == b")
    return cfg


def parse_config(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    pairs = parse_config(Path(path).read_text()) if path else {}
    pairs.update(overrides or {})
    return build_config(pairs)
