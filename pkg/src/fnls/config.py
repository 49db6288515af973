"""Run configuration: grid, phys, potential, solver and output blocks.

Config files are JSON objects with those five blocks. A file holding a bare
potential block (a top-level "family" key) is accepted as well. Command-line
flags override file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any

from .potential import potential_from_config
from .spectral import PhysParams, make_grid


class ConfigError(ValueError):
    pass


@dataclass
class GridBlock:
    d: int = 1
    n: int = 1024
    L: float = 40.0


@dataclass
class PhysBlock:
    s: float = 0.5
    p: float = 3.0
    c: float | None = None  # None: use the limit ground state's mass c0
    strict: bool = True


@dataclass
class SolverBlock:
    tol_grad: float = 1e-6
    tol_pohozaev: float = 1e-6
    tol_ground: float = 1e-10
    max_iter: int = 500
    ground_max_iter: int = 2000
    h_max: float = 6.0
    linking_eps: float = 0.1  # fraction of m_c
    radial_samples: int = 9
    angular_samples: int = 16
    h_samples: int = 41
    nonneg: bool = True


@dataclass
class OutputBlock:
    out: str | None = None
    report: str | None = None
    series: str | None = None


@dataclass
class RunConfig:
    grid: GridBlock = field(default_factory=GridBlock)
    phys: PhysBlock = field(default_factory=PhysBlock)
    potential: dict[str, Any] = field(default_factory=lambda: {"family": "constant", "a0": 1.0})
    solver: SolverBlock = field(default_factory=SolverBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    seed: int = 0

    def validate(self) -> RunConfig:
        try:
            make_grid(self.grid.d, self.grid.n, self.grid.L)
            # the admissible p-window is enforced by the commands that need it
            PhysParams(self.grid.d, self.phys.s, self.phys.p, self.phys.c or 1.0, strict=False)
            potential_from_config(self.potential)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("tol_grad", "tol_pohozaev", "tol_ground", "h_max", "linking_eps"):
            if not getattr(self.solver, name) > 0:
                raise ConfigError(f"solver.{name} must be positive")
        if self.solver.max_iter < 1:
            raise ConfigError("solver.max_iter must be at least 1")
        if self.solver.ground_max_iter < 1:
            raise ConfigError("solver.ground_max_iter must be at least 1")
        return self

    def params(self, c: float | None = None) -> PhysParams:
        c = self.phys.c if c is None else c
        return PhysParams(self.grid.d, self.phys.s, self.phys.p, 1.0 if c is None else c, self.phys.strict)

    def make_grid(self):
        return make_grid(self.grid.d, self.grid.n, self.grid.L)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_BLOCKS = {"grid": GridBlock, "phys": PhysBlock, "solver": SolverBlock, "output": OutputBlock}


def _fill(block_cls, data: dict[str, Any], where: str):
    known = set(block_cls.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return block_cls(**data)


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "family" in data:
        data = {"potential": data}
    unknown = set(data) - set(_BLOCKS) - {"potential", "seed"}
    if unknown:
        raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
    cfg = RunConfig()
    for name, cls in _BLOCKS.items():
        if name in data:
            setattr(cfg, name, _fill(cls, data[name], name))
    if "potential" in data:
        cfg.potential = dict(data["potential"])
    if "seed" in data:
        cfg.seed = int(data["seed"])
    return cfg


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(cfg: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Set dotted keys such as "grid.n" or "potential.mu"; None values are skipped."""
    for key, val in overrides.items():
        if val is None:
            continue
        block, _, name = key.partition(".")
        if block == "potential":
            cfg.potential[name] = val
        elif block == "seed":
            cfg.seed = int(val)
        else:
            target = getattr(cfg, block)
            if name not in type(target).__dataclass_fields__:
                raise ConfigError(f"unknown key {key}")
            setattr(target, name, val)
    return cfg
