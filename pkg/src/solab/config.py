"""Experiment configuration: plain-text key=value or JSON documents.

A config names the structure function, the grid, the boundary family and the
audit parameters.  Example (key=value form; JSON with the same keys is also
accepted):

    structure = power:p=3
    boundary = poly2:x1=0.5,x1t=0.4,x2=0.2
    resolution = 17
    box = [[-1,1],[-1,1],[-1,1]]
    epsilon = 1e-4
    sigma = 0.5
    gammas = [1, 2]
    omegas = [1, 2]
    radius = 0.8
    seed = 1234
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .orlicz import UnknownLabelError, catalog_structure_function, parse_label
from .problems import boundary_family_names

__all__ = ["ExperimentConfig", "ConfigError", "load_config"]


class ConfigError(ValueError):
    """Invalid or unresolvable experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    structure: str = "power:p=2"
    boundary: str = "affine:x1=1"
    n: int = 1
    box: list = field(default_factory=lambda: [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]])
    resolution: int | list = 9
    epsilon: float = 1e-4
    sigma: float = 0.5
    gammas: list = field(default_factory=lambda: [1.0])
    omegas: list = field(default_factory=lambda: [1.0])
    center: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    radius: float = 0.8
    eta_inner: float = 0.3
    eta_outer: float = 0.6
    moser_levels: int = 8
    refinements: int = 2
    seed: int = 1234
    residual_tol: float | None = None
    max_iters: int = 100_000
    init: str = "zero"
    out: str = "."

    def validate(self) -> "ExperimentConfig":
        if self.n < 1:
            raise ConfigError("n must be a positive integer")
        d = 2 * self.n + 1
        if len(self.box) != d or any(len(ext) != 2 or ext[0] >= ext[1] for ext in self.box):
            raise ConfigError(f"box must list {d} nondegenerate extents")
        res = [self.resolution] * d if isinstance(self.resolution, (int, float)) else list(self.resolution)
        if len(res) != d or any(int(r) < 9 for r in res):
            raise ConfigError("resolutions must be >= 9 per axis")
        if not 0 < self.sigma < 1:
            raise ConfigError("sigma must lie in the open interval (0,1)")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0,1)")
        if not 0 < self.eta_inner < self.eta_outer:
            raise ConfigError("need 0 < eta_inner < eta_outer")
        if len(self.center) != d:
            raise ConfigError(f"center must have {d} coordinates")
        if self.radius <= 0:
            raise ConfigError("radius must be positive")
        if self.refinements < 0:
            raise ConfigError("refinements must be nonnegative")
        if self.moser_levels < 2:
            raise ConfigError("moser_levels must be at least 2")
        try:
            catalog_structure_function(self.structure)
        except UnknownLabelError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            name, _ = parse_label(self.boundary)
        except UnknownLabelError as exc:
            raise ConfigError(str(exc)) from exc
        if name not in boundary_family_names():
            raise ConfigError(f"unknown boundary family {name!r}")
        return self

    def resolutions(self) -> list[int]:
        d = 2 * self.n + 1
        if isinstance(self.resolution, (int, float)):
            return [int(self.resolution)] * d
        return [int(r) for r in self.resolution]


def _parse_keyvalue(text: str) -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip()
        val = val.strip()
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val  # bare strings (labels, paths)
    return out


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Load a JSON or key=value config file and validate it."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    else:
        data = _parse_keyvalue(text)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**data)
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()
