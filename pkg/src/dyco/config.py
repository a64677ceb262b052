"""Flat key=value configuration covering training, model and sequence knobs.

Unknown keys are rejected; parse(serialize(c)) reproduces c exactly.
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .rotation import ROTATION_REPS

# Paper-scale values kept selectable: triplane_resolutions=64,128,256,512,
# iterations=200000, seq 6/25/25; desk-scale defaults below train in minutes.
PAPER_TRIPLANE_RESOLUTIONS = (64, 128, 256, 512)


@dataclass
class Config:
    iterations: int = 2000
    rays_per_batch: int = 1024
    n_samples: int = 64
    lr_triplane: float = 5e-4
    lr_other: float = 5e-5
    seed: int = 0
    ramp_fraction: float = 0.1      # non-rigid offset anneals over this share
    seq_length: int = 6
    seq_step: int = 25
    delta_step: int = 25
    rotation_rep: str = "axis_angle"
    volume_size: int = 32
    triplane_resolutions: tuple = (16, 32, 64, 128)
    nonrigid_width: int = 128
    head_width: int = 256
    aabb_margin: float = 0.3
    canonical_margin: float = 0.5
    delta_condition: bool = True    # off: zero the delta sequence (ablation)
    precision: str = "float32"
    log_every: int = 100
    probe_pixels: int = 512

    def __post_init__(self):
        if isinstance(self.triplane_resolutions, list):
            self.triplane_resolutions = tuple(self.triplane_resolutions)
        if self.rotation_rep not in ROTATION_REPS:
            raise ConfigError(f"rotation_rep must be one of {ROTATION_REPS}")
        if self.precision not in ("float32", "float64"):
            raise ConfigError("precision must be float32 or float64")
        for name in ("iterations", "rays_per_batch", "n_samples", "seq_length",
                     "seq_step", "delta_step", "volume_size", "log_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0.0 <= self.ramp_fraction <= 1.0):
            raise ConfigError("ramp_fraction must lie in [0, 1]")

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def _parse_value(text: str, ftype, name: str):
    text = text.strip()
    try:
        if ftype is bool:
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if ftype is int:
            return int(text)
        if ftype is float:
            return float(text)
        if ftype is tuple:
            return tuple(int(x) for x in text.split(","))
        return text
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {text!r}") from e


def serialize_config(cfg: Config) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}"
             for f in fields(Config)]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> Config:
    ftypes = {f.name: f.type for f in fields(Config)}
    # dataclass field .type may be the string annotation; map by default value
    defaults = Config()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in ftypes:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(val, type(getattr(defaults, key)), key)
    return Config(**values)


def load_config(path) -> Config:
    with open(path) as f:
        return parse_config(f.read())


def save_config(cfg: Config, path) -> None:
    with open(path, "w") as f:
        f.write(serialize_config(cfg))
