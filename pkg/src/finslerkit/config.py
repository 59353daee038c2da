"""Run configuration: a flat key = value file with sections, every key overridable from the CLI."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


@dataclass
class RunConfig:
    # general
    seed: int = 42
    out: str = "reports"
    format: str = "json"
    fd_base_step: float = 1e-2
    # sweeps over the phi_lambda family
    lams: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0, 2.0])
    ts: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    # minkowski
    minkowski_points: int = 20
    # funk / area integrand
    funk_nodes: int = 512
    funk_draws: int = 200
    funk_tol: float = 1e-8
    area_grid: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    area_bivectors: int = 20
    area_tol: float = 1e-7
    # hamel
    hamel_samples: int = 100
    hamel_tol: float = 1e-6
    # geodesics
    geodesic_count: int = 20
    geodesic_steps: int = 1024
    geodesic_time: float = 1.0
    geodesic_tol: float = 1e-6
    conformal_threshold: float = 1e-2
    # berck
    berck_rel_tol: float = 1e-4
    berck_abs_tol: float = 1e-8
    # crofton
    crofton_samples: int = 1_000_000
    crofton_sigmas: float = 4.0
    crofton_disc_segments: int = 256
    crofton_sphere_level: int = 5
    crofton_sphere_radius: float = 1.5
    # reduction identity
    reduction_tol: float = 5e-3
    surface_nodes_s: int = 16
    surface_nodes_t: int = 32
    fiber_nodes_alpha: int = 16
    fiber_nodes_beta: int = 32
    dual_grid_s: int = 24
    dual_grid_t: int = 48
    dual_samples: int = 1024
    polar_nodes: int = 256

    TOLERANCES = ("funk_tol", "area_tol", "hamel_tol", "geodesic_tol", "berck_rel_tol",
                  "berck_abs_tol", "crofton_sigmas", "reduction_tol", "fd_base_step")
    NODE_COUNTS = ("funk_nodes", "surface_nodes_s", "surface_nodes_t", "fiber_nodes_alpha",
                   "fiber_nodes_beta", "dual_grid_s", "dual_grid_t", "polar_nodes")

    def __post_init__(self):
        self.validate()

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def validate(self) -> None:
        for k in self.TOLERANCES:
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be positive, got {getattr(self, k)}")
        for k in self.NODE_COUNTS:
            n = getattr(self, k)
            if n < 16 or n % 2:
                raise ConfigError(f"{k} must be even and >= 16, got {n}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.crofton_samples < 2:
            raise ConfigError("crofton_samples must be at least 2")

    def coerce(self, key: str, value: Any):
        kind = type(getattr(RunConfig(), key))
        if kind is list:
            return _floats(value)
        if kind is int:
            return int(float(value)) if isinstance(value, str) and "e" in value.lower() else int(value)
        return kind(value)

    def updated(self, **overrides) -> "RunConfig":
        unknown = set(overrides) - set(self.keys())
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = dataclasses.asdict(self)
        for k, v in overrides.items():
            try:
                values[k] = self.coerce(k, v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {v!r}") from exc
        return RunConfig(**values)

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        flat: dict[str, str] = {}
        for section in parser.sections():
            for k, v in parser.items(section):
                if k in flat:
                    raise ConfigError(f"{path}: key {k!r} appears in more than one section")
                flat[k] = v
        return cls().updated(**flat)

    def to_file(self, path) -> None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser["run"] = {k: (", ".join(repr(float(x)) for x in v) if isinstance(v, list) else str(v))
                         for k, v in self.snapshot().items()}
        with open(Path(path), "w", encoding="utf-8") as fh:
            parser.write(fh)
