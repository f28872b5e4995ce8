"""Experiment configuration: one TOML file drives every subcommand.

Sections: [phi] (generator kind and parameter or table file), [f] (skeleton
breakpoints plus forcing nodes), [domain] (shape, sizes, grid), [solver]
(tolerances, multistart, lambda grid, march step), [output] (directory,
plot toggle).  Environment variables prefixed PHILAP_ override scalar
fields (PHILAP_SEED, PHILAP_OUT_DIR, PHILAP_GRID, PHILAP_THREADS), and CLI
flags override both.
"""

from __future__ import annotations

import csv
import hashlib
import os
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import PhilapError
from .grids import Domain
from .nfunction import PhiSpec
from .nonlinearity import NonlinearitySpec

ENV_PREFIX = "PHILAP_"


class ConfigError(PhilapError):
    """Unparseable or structurally invalid configuration."""


@dataclass
class SolverOptions:
    gtol: float = 1e-8
    max_iter: int = 100_000
    multistart: int = 2
    rk_step: float | None = None       # radial march step; default R/1000
    lambda_min: float = 1.0
    lambda_max: float = 1000.0
    lambda_steps: int = 10
    lambda_scale: str = "geometric"    # or "linear"
    delta: float | None = None         # plateau collar width
    scan_samples: int = 64

    def lambda_grid(self):
        if self.lambda_scale == "linear":
            return np.linspace(self.lambda_min, self.lambda_max, self.lambda_steps)
        return np.geomspace(self.lambda_min, self.lambda_max, self.lambda_steps)


@dataclass
class OutputOptions:
    out_dir: Path = Path("out")
    plots: bool = True


@dataclass
class ExperimentConfig:
    phi: PhiSpec
    f: NonlinearitySpec
    domain: Domain
    solver: SolverOptions
    output: OutputOptions
    seed: int
    config_hash: str
    path: Path | None = None

    def rng(self, stream):
        """Deterministic per-subtask generator fanned out from the seed."""
        tag = zlib.crc32(str(stream).encode("utf-8"))
        return np.random.default_rng([self.seed, tag])


_REQUIRED = object()


def _get(table, key, kind, where, default=_REQUIRED):
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"[{where}] missing required key {key!r}")
        return default
    val = table[key]
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return int(val)
    if not isinstance(val, kind):
        raise ConfigError(
            f"[{where}] key {key!r} should be {kind.__name__}, got {type(val).__name__}")
    return val


def _build_phi(table, base_dir):
    kind = _get(table, "kind", str, "phi")
    if kind == "p_power":
        return PhiSpec.p_power(_get(table, "p", float, "phi"))
    if kind == "curvature":
        return PhiSpec.curvature(_get(table, "gamma", float, "phi"))
    if kind == "plog":
        return PhiSpec.plog(_get(table, "p", float, "phi"))
    if kind == "custom":
        rel = _get(table, "table", str, "phi")
        path = (base_dir / rel) if not os.path.isabs(rel) else Path(rel)
        if not path.exists():
            raise ConfigError(f"[phi] table file {path} does not exist")
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh)
                    if r and not r[0].lstrip().startswith("#")]
        try:
            data = np.array([[float(a), float(b)] for a, b in rows])
        except ValueError as exc:
            raise ConfigError(f"[phi] bad table row in {path}: {exc}") from exc
        return PhiSpec.custom(data[:, 0], data[:, 1])
    raise ConfigError(f"[phi] unknown kind {kind!r}")


def _build_f(table):
    bp = _get(table, "breakpoints", list, "f")
    nodes = _get(table, "nodes", list, "f")
    try:
        return NonlinearitySpec(bp, [(row[0], row[1]) for row in nodes])
    except PhilapError as exc:
        raise ConfigError(f"[f] {exc}") from exc


def _build_domain(table, grid_override=None):
    shape = _get(table, "shape", str, "domain")
    n = int(grid_override) if grid_override else _get(table, "grid", int, "domain")
    if shape == "interval":
        return Domain.interval(_get(table, "length", float, "domain"), n)
    if shape == "rectangle":
        lengths = _get(table, "lengths", list, "domain")
        if len(lengths) != 2:
            raise ConfigError("[domain] rectangle needs two lengths")
        return Domain.rectangle(float(lengths[0]), float(lengths[1]), n, n)
    if shape == "ball":
        return Domain.ball(_get(table, "radius", float, "domain"),
                           _get(table, "dimension", int, "domain"), n)
    raise ConfigError(f"[domain] unknown shape {shape!r}")


def load_config(path, grid=None, seed=None, out_dir=None):
    """Parse a TOML experiment file, applying env and explicit overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in ("phi", "f", "domain"):
        if section not in data:
            raise ConfigError(f"{path}: missing [{section}] section")
    env_seed = os.environ.get(ENV_PREFIX + "SEED")
    env_grid = os.environ.get(ENV_PREFIX + "GRID")
    env_out = os.environ.get(ENV_PREFIX + "OUT_DIR")
    if seed is None:
        seed = int(env_seed) if env_seed else data.get("seed", 0)
    if grid is None and env_grid:
        grid = int(env_grid)
    sv = data.get("solver", {})
    solver = SolverOptions(
        gtol=_get(sv, "gtol", float, "solver", 1e-8),
        max_iter=_get(sv, "max_iter", int, "solver", 100_000),
        multistart=_get(sv, "multistart", int, "solver", 2),
        rk_step=_get(sv, "rk_step", float, "solver", None),
        lambda_min=_get(sv, "lambda_min", float, "solver", 1.0),
        lambda_max=_get(sv, "lambda_max", float, "solver", 1000.0),
        lambda_steps=_get(sv, "lambda_steps", int, "solver", 10),
        lambda_scale=_get(sv, "lambda_scale", str, "solver", "geometric"),
        delta=_get(sv, "delta", float, "solver", None),
        scan_samples=_get(sv, "scan_samples", int, "solver", 64),
    )
    if solver.gtol <= 0 or solver.lambda_min <= 0 or \
            solver.lambda_max < solver.lambda_min:
        raise ConfigError("[solver] tolerances must be positive and the "
                          "lambda grid increasing")
    ov = data.get("output", {})
    out = OutputOptions(
        out_dir=Path(out_dir or env_out or _get(ov, "dir", str, "output", "out")),
        plots=_get(ov, "plots", bool, "output", True),
    )
    try:
        phi = _build_phi(data["phi"], path.parent)
        f = _build_f(data["f"])
        domain = _build_domain(data["domain"], grid_override=grid)
    except PhilapError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig(
        phi=phi, f=f, domain=domain, solver=solver, output=out,
        seed=int(seed), config_hash=hashlib.sha256(raw).hexdigest()[:16],
        path=path)
