"""Run configuration: a flat key = value file (TOML subset) merged with CLI flags."""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "RunConfig", "load_config_file"]


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


@dataclass
class RunConfig:
    dim: int = 2
    geometry: str = "ellipse"
    r: float | None = None
    a: float | None = None
    b: float | None = None
    e2: float | None = None
    e3: float | None = None
    z: float = 0.3
    m: float = 1.0
    c_lambda: float = 1.0
    n: int = 128
    resolutions: list = field(default_factory=lambda: [32, 64, 128])
    level: int = 2
    levels: list = field(default_factory=lambda: [1, 2])
    oversample: int = 2
    pv: str = "polar"
    eps_schedule: list | None = None
    controls: bool = True
    seed: int = 0
    threads: int | None = None
    out: str | None = None
    csv_dir: str | None = None
    svg: str | None = None

    def geometry_params(self):
        keys = {"circle": ("r",), "ellipse": ("a", "b"), "bean": ("r", "e2", "e3")}
        if self.geometry not in keys:
            raise ConfigError(f"unknown geometry {self.geometry!r}; choose circle, ellipse or bean")
        return {k: getattr(self, k) for k in keys[self.geometry] if getattr(self, k) is not None}

    def validate(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}")
        if not self.m > 0:
            raise ConfigError(f"mass must be positive, got m={self.m}")
        if not abs(self.z) < self.m:
            raise ConfigError(f"z outside spectral gap (-m, m): z={self.z}, m={self.m}")
        if not self.c_lambda > 0:
            raise ConfigError("c_lambda must be positive")
        if self.dim == 2:
            self.geometry_params()
            if self.n < 4:
                raise ConfigError("n must be >= 4")
        for name in ("resolutions", "levels"):
            seq = list(getattr(self, name))
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise ConfigError(f"{name} must be strictly increasing, got {seq}")
        if self.level < 1 or any(lv < 1 for lv in self.levels):
            raise ConfigError("sphere levels must be >= 1")
        if self.pv not in ("polar", "richardson"):
            raise ConfigError(f"pv must be 'polar' or 'richardson', got {self.pv!r}")
        if self.eps_schedule is not None:
            eps = list(self.eps_schedule)
            if len(eps) < 3 or eps[-1] <= 0 or any(b >= a for a, b in zip(eps, eps[1:])):
                raise ConfigError(f"eps_schedule needs >= 3 strictly decreasing positive radii, got {eps}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        return self

    def to_dict(self):
        return asdict(self)

    def update(self, values):
        known = {f.name for f in fields(self)}
        for key, val in values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if val is not None:
                setattr(self, key, val)
        return self


def load_config_file(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat key = value pairs; found tables {nested}")
    return data
