"""Run configurations and the solver-vs-oracle experiments behind the CLI."""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import problem as pb
from .oracle import FourierOracle
from .steady_bem import RobinData, SteadyBemMesh, assemble_and_solve
from .stum import SpaceGrid, TimeGrid, march, reconstruct

PROBLEMS = ("dirichlet", "neumann", "steady")
SWEEP_PARAMS = ("dt", "M", "modes")

# per-problem defaults: the reference Dirichlet and Neumann experiments
DEFAULTS = {
    "dirichlet": {"M": 41, "dt": 0.0625},
    "neumann": {"M": 161, "dt": 0.005},
    "steady": {"M": 64, "dt": 0.0625},
}

# manufactured harmonic cases for the steady solver: name -> (tolerance, checked from n elements)
STEADY_CASES = {
    "x1": (1e-3, 64),
    "x1^2-x2^2": (5e-3, 128),
}
STEADY_ELEMENTS = (32, 64, 128, 256)


class ConfigError(ValueError):
    """Bad configuration or unreadable input; maps to exit status 2."""


@dataclass
class RunConfig:
    problem: str = "dirichlet"
    nu: float = 0.05
    L: float = 1.0
    T: float = 1.0
    M: Optional[int] = None
    dt: Optional[float] = None
    modes: int = 128
    snapshots: tuple = (0.25, 0.5, 1.0)
    initial: str = "paper-gaussian"
    gaussian_sign: str = "minus"
    tol: float = 5e-2
    out: str = "-"

    def resolved(self) -> "RunConfig":
        """Copy with per-problem defaults filled in and values validated."""
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        d = DEFAULTS[self.problem]
        cfg = dataclasses.replace(
            self,
            M=d["M"] if self.M is None else int(self.M),
            dt=d["dt"] if self.dt is None else float(self.dt),
            snapshots=tuple(float(t) for t in self.snapshots),
        )
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("nu", "L", "T", "dt", "tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if self.M < 2:
            raise ConfigError("M must be >= 2")
        if self.modes < 1:
            raise ConfigError("modes must be >= 1")
        if self.gaussian_sign not in ("minus", "plus"):
            raise ConfigError("gaussian-sign must be 'minus' or 'plus'")
        if self.problem != "steady":
            if not self.snapshots:
                raise ConfigError("need at least one snapshot time")
            if any(not 0 < t <= self.T + 1e-12 for t in self.snapshots):
                raise ConfigError(f"snapshot times must lie in (0, T={self.T}]")
            grid = TimeGrid.covering(self.T, self.dt)
            if max(self.snapshots) > grid.t_end + 1e-12:
                raise ConfigError(f"snapshot {max(self.snapshots)} is beyond the last step {grid.t_end}")

    # key=value text form -------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "snapshots":
                v = ",".join(repr(float(t)) for t in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name.replace('_', '-')}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {
    "problem": str, "nu": float, "L": float, "T": float, "M": int, "dt": float,
    "modes": int, "initial": str, "gaussian_sign": str, "tol": float, "out": str,
}


def coerce(key: str, raw: str):
    key = key.strip().replace("-", "_")
    if key == "snapshots":
        try:
            return key, tuple(float(s) for s in raw.split(",") if s.strip())
        except ValueError:
            raise ConfigError(f"bad snapshot list {raw!r}") from None
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    if raw == "" and key in ("M", "dt"):
        return key, None
    try:
        return key, _FIELD_TYPES[key](raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        key, val = coerce(k, v)
        values[key] = val
    return values


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


# problem construction -----------------------------------------------------


def initial_profile(cfg: RunConfig):
    kind = cfg.initial
    if kind == "paper-gaussian":
        return pb.paper_gaussian(cfg.L, cfg.gaussian_sign)
    if kind == "single-mode":
        return pb.single_mode(cfg.L, cfg.problem)
    if kind.startswith("constant:"):
        try:
            return pb.constant(float(kind.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"bad constant initial profile {kind!r}") from None
    if kind.startswith("file:"):
        path = kind.split(":", 1)[1]
        try:
            data = np.loadtxt(path, delimiter=None if "," not in Path(path).read_text() else ",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read initial profile {path}: {exc}") from None
        if data.shape[1] != 2 or len(data) < 2:
            raise ConfigError(f"initial profile {path} needs two columns x,value")
        order = np.argsort(data[:, 0])
        xs, ys = data[order, 0], data[order, 1]
        return lambda x: np.interp(x, xs, ys)
    raise ConfigError(f"unknown initial profile {kind!r}")


def build_problem(cfg: RunConfig) -> pb.DiffusionProblem:
    return pb.DiffusionProblem(cfg.nu, cfg.L, cfg.T, initial_profile(cfg), bc_kind=cfg.problem)


@dataclass
class SnapshotError:
    t: float
    max_rel_err: float
    l2_rel_err: float


@dataclass
class RunResult:
    config: RunConfig
    x: np.ndarray
    times: np.ndarray
    C: np.ndarray
    C_exact: np.ndarray
    errors: list
    wall_time: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.max_rel_err <= self.config.tol for e in self.errors)

    @property
    def max_rel_err(self) -> float:
        return max(e.max_rel_err for e in self.errors)

    @property
    def l2_rel_err(self) -> float:
        return max(e.l2_rel_err for e in self.errors)


def _rel_errors(C, Cex):
    diff = C - Cex
    scale = np.max(np.abs(Cex))
    l2 = np.linalg.norm(Cex)
    return (float(np.max(np.abs(diff)) / scale) if scale > 0 else float(np.max(np.abs(diff))),
            float(np.linalg.norm(diff) / l2) if l2 > 0 else float(np.linalg.norm(diff)))


def run_unsteady(cfg: RunConfig, x_eval=None) -> RunResult:
    cfg = cfg.resolved()
    if cfg.problem == "steady":
        raise ConfigError("run_unsteady needs a dirichlet or neumann config")
    p = build_problem(cfg)
    sg = SpaceGrid(cfg.M, cfg.L)
    tg = TimeGrid.covering(cfg.T, cfg.dt)
    x = sg.midpoints if x_eval is None else np.asarray(x_eval, dtype=float)
    t0 = time.perf_counter()
    hist = march(p, sg, tg)
    C = np.column_stack([reconstruct(p, sg, tg, hist, x, t) for t in cfg.snapshots])
    wall = time.perf_counter() - t0
    oracle = FourierOracle.build(p, cfg.modes)
    Cex = np.column_stack([oracle(x, t) for t in cfg.snapshots])
    errors = [SnapshotError(t, *_rel_errors(C[:, j], Cex[:, j])) for j, t in enumerate(cfg.snapshots)]
    return RunResult(cfg, x, np.array(cfg.snapshots), C, Cex, errors, wall, {"history": hist})


@dataclass
class SteadyRow:
    case: str
    elements: int
    max_abs_err: float
    tol: Optional[float]

    @property
    def passed(self) -> bool:
        return self.tol is None or self.max_abs_err <= self.tol


def _steady_case(name: str):
    if name == "x1":
        return (lambda x: x[:, 0]), (lambda x: np.column_stack([np.ones(len(x)), np.zeros(len(x))]))
    return (lambda x: x[:, 0] ** 2 - x[:, 1] ** 2), (lambda x: np.column_stack([2 * x[:, 0], -2 * x[:, 1]]))


def steady_manufactured(name: str, elements: int, nu: float = 1.0):
    """Solve a manufactured harmonic case on the unit square with ``a = 1``."""
    sol, grad = _steady_case(name)
    mesh = SteadyBemMesh.unit_square(elements)
    data = RobinData(a=1.0, b=lambda x, n: np.sum(grad(x) * n, axis=1) + sol(x))
    C = assemble_and_solve(mesh, data, nu)
    return mesh, data, C, float(np.max(np.abs(C - sol(mesh.midpoints))))


def run_steady(cfg: RunConfig, elements=STEADY_ELEMENTS):
    cfg = cfg.resolved()
    rows = []
    t0 = time.perf_counter()
    for name, (tol, n_check) in STEADY_CASES.items():
        for n in elements:
            err = steady_manufactured(name, n, cfg.nu)[3]
            rows.append(SteadyRow(name, n, err, tol if n >= n_check else None))
    return rows, time.perf_counter() - t0


@dataclass
class SweepRow:
    value: float
    max_rel_err: float
    l2_rel_err: float
    wall_time_ms: float


def sweep(cfg: RunConfig, parameter: str, values) -> list:
    """One summary row per value, in the given order.

    Sweeps over ``M`` score every run on the base configuration's grid so
    the errors are measured at the same points.
    """
    if parameter not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {parameter!r}")
    values = list(values)
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two values")
    base = cfg.resolved()
    x_eval = SpaceGrid(base.M, base.L).midpoints if parameter == "M" else None
    rows = []
    for v in values:
        v = int(v) if parameter in ("M", "modes") else float(v)
        res = run_unsteady(dataclasses.replace(base, **{parameter: v}), x_eval)
        rows.append(SweepRow(float(v), res.max_rel_err, res.l2_rel_err, 1000.0 * res.wall_time))
    return rows
