"""Space-time-unified boundary integral solver for 1D diffusion.

The boundary unknowns at ``x = -L`` and ``x = +L`` are piecewise constant
on time slabs ``(t_{k-1}, t_k]``.  Collocating the boundary integral
equations at ``t = t_k`` gives a causal (lower-triangular) system that is
solved one 2x2 block per step.  Interior values then follow from the
representation formula, with free-term factor 1 inside and 1/2 at the
endpoints.

Dirichlet problems march the boundary flux ``dC/dx(+-L)``; Neumann and
Robin problems march the boundary trace ``C(+-L)``.  Time-slab integrals of
the kernels are exact (see :mod:`girm.kernels`), and on a uniform grid they
depend only on the lag ``k - j``, so they are tabulated once per run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import heat_kernel, slab_double_layer, slab_single_layer
from .problem import DiffusionProblem, FieldGrid

__all__ = [
    "TimeGrid",
    "SpaceGrid",
    "BoundaryHistory",
    "IllConditionedStep",
    "initial_layer",
    "source_layer",
    "march_dirichlet",
    "march_neumann",
    "march_robin",
    "march",
    "reconstruct",
    "solve_field",
]


class IllConditionedStep(ArithmeticError):
    def __init__(self, k: int, det: float):
        super().__init__(f"singular 2x2 collocation system at step k={k} (det={det:.3e})")
        self.k = k
        self.det = det


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    K: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"time step must be positive, got {self.dt!r}")
        if self.K < 1:
            raise ValueError("need at least one time step")

    @classmethod
    def covering(cls, T: float, dt: float) -> "TimeGrid":
        """Largest grid with ``K dt <= T``."""
        return cls(dt, max(1, int(math.floor(T / dt + 1e-9))))

    @property
    def t_end(self) -> float:
        return self.K * self.dt

    def time(self, k: int) -> float:
        return k * self.dt

    def check(self, p: DiffusionProblem):
        if self.K * self.dt > p.T + 1e-12:
            raise ValueError(f"time grid ends at {self.t_end!r}, beyond T={p.T!r}")


@dataclass(frozen=True)
class SpaceGrid:
    M: int
    L: float

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("need at least two cells")
        if not self.L > 0:
            raise ValueError("half-length must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def midpoints(self) -> np.ndarray:
        return -self.L + (np.arange(self.M) + 0.5) * self.dx


@dataclass
class BoundaryHistory:
    """Slab densities at ``-L`` and ``+L``; ``kind`` is ``flux`` or ``trace``."""

    kind: str
    dt: float
    minus: list = field(default_factory=list)
    plus: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("flux", "trace"):
            raise ValueError(f"history kind must be 'flux' or 'trace', got {self.kind!r}")

    def append(self, v_minus: float, v_plus: float):
        self.minus.append(float(v_minus))
        self.plus.append(float(v_plus))

    def __len__(self) -> int:
        return len(self.minus)

    @property
    def slabs(self) -> np.ndarray:
        """``(K, 2)`` array of ``(v_minus, v_plus)`` per slab."""
        return np.column_stack([self.minus, self.plus]) if self.minus else np.zeros((0, 2))


def _check_time(t):
    if not t > 0:
        raise ValueError(f"layer potentials need t > 0, got {t!r}")


def initial_layer(p: DiffusionProblem, sg: SpaceGrid, x, t: float):
    """Midpoint sum of ``C0(xi) G(x - xi, t)`` over the cells."""
    _check_time(t)
    xm = sg.midpoints
    c0 = p.initial(xm)
    xa = np.asarray(x, dtype=float)
    g = heat_kernel(np.subtract.outer(xa, xm), t, p.nu)
    out = np.asarray(g) @ c0 * sg.dx
    return float(out) if np.ndim(out) == 0 else out


def _slab_windows(tg: TimeGrid, t: float):
    """Slab indices (1-based) and elapsed-time windows seen from time ``t``."""
    J = min(tg.K, int(math.ceil(t / tg.dt - 1e-9)))
    j = np.arange(1, J + 1)
    s1 = np.maximum(t - j * tg.dt, 0.0)
    s2 = t - (j - 1) * tg.dt
    return j, s1, s2


def source_layer(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid, x, t: float):
    """Source potential: sigma sampled at cell and slab midpoints, kernel
    integrated exactly over each (possibly partial) slab."""
    _check_time(t)
    xa = np.asarray(x, dtype=float)
    if not p.has_source:
        return 0.0 if xa.ndim == 0 else np.zeros(xa.shape)
    xm = sg.midpoints
    j, s1, s2 = _slab_windows(tg, t)
    # midpoint of the part of each slab that lies before t
    tau_mid = 0.5 * ((j - 1) * tg.dt + np.minimum(j * tg.dt, t))
    sig = np.stack([p.source(xm, tau) for tau in tau_mid], axis=1)  # (M, J)
    d = np.subtract.outer(xa, xm)[..., None]  # (..., M, 1)
    w = slab_single_layer(d, s1, s2, p.nu)  # (..., M, J)
    out = np.sum(w * sig, axis=(-2, -1)) * sg.dx
    return float(out) if np.ndim(out) == 0 else out


def _lag_tables(p: DiffusionProblem, tg: TimeGrid):
    lag = np.arange(tg.K)
    s1 = lag * tg.dt
    s2 = (lag + 1) * tg.dt
    two_L = 2.0 * p.L
    return {
        "S0": slab_single_layer(0.0, s1, s2, p.nu),
        "S2": slab_single_layer(two_L, s1, s2, p.nu),
        # double layer seen from x = +L (d = +2L); from x = -L it is the negative
        "D2": slab_double_layer(two_L, s1, s2, p.nu),
    }


def _boundary_initial_layers(p, sg, tg):
    tk = tg.dt * np.arange(1, tg.K + 1)
    xb = np.array([-p.L, p.L])
    return np.array([initial_layer(p, sg, xb, t) for t in tk])  # (K, 2)


def _solve2(A, r, k, hist):
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not abs(det) > 1e-14 * np.max(np.abs(A)) ** 2:
        raise IllConditionedStep(k, det)
    v = np.linalg.solve(A, r)
    hist.append(v[0], v[1])


def march_dirichlet(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid) -> BoundaryHistory:
    """March the boundary fluxes ``dC/dx(-L, t)`` and ``dC/dx(+L, t)``."""
    if p.bc_kind != "dirichlet":
        raise ValueError("march_dirichlet needs a Dirichlet problem")
    tg.check(p)
    nu, dt, K = p.nu, tg.dt, tg.K
    tab = _lag_tables(p, tg)
    S0, S2, D2 = tab["S0"], tab["S2"], tab["D2"]
    I0 = _boundary_initial_layers(p, sg, tg)
    mids = (np.arange(1, K + 1) - 0.5) * dt
    cm = np.array([p.dirichlet_value(-1, t) for t in mids])
    cp = np.array([p.dirichlet_value(+1, t) for t in mids])
    hist = BoundaryHistory("flux", dt)
    qm = np.zeros(K)
    qp = np.zeros(K)
    A = nu * np.array([[S0[0], -S2[0]], [S2[0], -S0[0]]])
    for k in range(1, K + 1):
        t = k * dt
        s0, s2, d2 = S0[:k][::-1], S2[:k][::-1], D2[:k][::-1]
        src = source_layer(p, sg, tg, np.array([-p.L, p.L]), t)
        # known part of the double layer: d = 0 vanishes, d = -2L at x = -L, d = +2L at x = +L
        dbl_m = nu * (-np.dot(cp[:k], -d2))
        dbl_p = nu * np.dot(cm[:k], d2)
        past_m = nu * (np.dot(qm[:k - 1], s0[:k - 1]) - np.dot(qp[:k - 1], s2[:k - 1]))
        past_p = nu * (np.dot(qm[:k - 1], s2[:k - 1]) - np.dot(qp[:k - 1], s0[:k - 1]))
        r = np.array([
            -p.dirichlet_value(-1, t) / 2 + I0[k - 1, 0] + src[0] - dbl_m - past_m,
            -p.dirichlet_value(+1, t) / 2 + I0[k - 1, 1] + src[1] - dbl_p - past_p,
        ])
        _solve2(A, r, k, hist)
        qm[k - 1], qp[k - 1] = hist.minus[-1], hist.plus[-1]
    return hist


def march_robin(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid) -> BoundaryHistory:
    """March the boundary traces for ``dC/dx + a C = b`` at both ends."""
    if p.bc_kind not in ("neumann", "robin"):
        raise ValueError("march_robin needs a Neumann or Robin problem")
    tg.check(p)
    nu, dt, K = p.nu, tg.dt, tg.K
    tab = _lag_tables(p, tg)
    S0, S2, D2 = tab["S0"], tab["S2"], tab["D2"]
    I0 = _boundary_initial_layers(p, sg, tg)
    mids = (np.arange(1, K + 1) - 0.5) * dt
    am = np.array([p.robin_a(-1, t) for t in mids])
    ap = np.array([p.robin_a(+1, t) for t in mids])
    bm = np.array([p.robin_b(-1, t) for t in mids])
    bp = np.array([p.robin_b(+1, t) for t in mids])
    hist = BoundaryHistory("trace", dt)
    um = np.zeros(K)
    up = np.zeros(K)
    for k in range(1, K + 1):
        t = k * dt
        s0, s2, d2 = S0[:k][::-1], S2[:k][::-1], D2[:k][::-1]
        src = source_layer(p, sg, tg, np.array([-p.L, p.L]), t)
        # row x = -L: S(x+L) = s0, S(x-L) = s2, D(x+L) = 0, D(x-L) = -d2
        # row x = +L: S(x+L) = s2, S(x-L) = s0, D(x+L) = d2, D(x-L) = 0
        rhs_m = I0[k - 1, 0] + src[0] - nu * (np.dot(bm[:k], s0) - np.dot(bp[:k], s2))
        rhs_p = I0[k - 1, 1] + src[1] - nu * (np.dot(bm[:k], s2) - np.dot(bp[:k], s0))
        # unknown side: u/2 + nu sum[-a- u- S(x+L) + u- D(x+L) + a+ u+ S(x-L) - u+ D(x-L)]
        j = slice(0, k - 1)
        past_m = nu * (-np.dot(am[j] * um[j], s0[j]) + np.dot(ap[j] * up[j], s2[j]) + np.dot(up[j], d2[j]))
        past_p = nu * (-np.dot(am[j] * um[j], s2[j]) + np.dot(um[j], d2[j]) + np.dot(ap[j] * up[j], s0[j]))
        n = k - 1
        A = np.array([
            [0.5 - nu * am[n] * s0[n], nu * (ap[n] * s2[n] + d2[n])],
            [nu * (d2[n] - am[n] * s2[n]), 0.5 + nu * ap[n] * s0[n]],
        ])
        r = np.array([rhs_m - past_m, rhs_p - past_p])
        _solve2(A, r, k, hist)
        um[n], up[n] = hist.minus[-1], hist.plus[-1]
    return hist


def march_neumann(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid) -> BoundaryHistory:
    """March the boundary traces ``C(-L, t)`` and ``C(+L, t)``."""
    if p.bc_kind != "neumann":
        raise ValueError("march_neumann needs a Neumann problem")
    return march_robin(p, sg, tg)


def march(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid) -> BoundaryHistory:
    if p.bc_kind == "dirichlet":
        return march_dirichlet(p, sg, tg)
    return march_robin(p, sg, tg)


def reconstruct(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid, hist: BoundaryHistory, x, t: float):
    """Evaluate the representation formula at ``x`` (scalar or array) and ``t``."""
    _check_time(t)
    if t > tg.t_end * (1 + 1e-12):
        raise ValueError(f"t={t!r} lies beyond the marched history (t_end={tg.t_end!r})")
    j, s1, s2 = _slab_windows(tg, t)
    if len(hist) < j.size:
        raise ValueError(f"history covers {len(hist)} slabs, {j.size} needed at t={t!r}")
    xa = np.asarray(x, dtype=float)
    L = p.L
    if np.any(xa < -L - 1e-12) or np.any(xa > L + 1e-12):
        raise ValueError("reconstruction point outside [-L, L]")
    nu = p.nu
    tol = 1e-12 * L
    dm = (xa + L)[..., None]
    dp = (xa - L)[..., None]
    # the coincident-point double layer vanishes; pin d = 0 exactly at the ends
    dm = np.where(np.abs(dm) < tol, 0.0, dm)
    dp = np.where(np.abs(dp) < tol, 0.0, dp)
    Sm = slab_single_layer(dm, s1, s2, nu)
    Sp = slab_single_layer(dp, s1, s2, nu)
    Dm = slab_double_layer(dm, s1, s2, nu)
    Dp = slab_double_layer(dp, s1, s2, nu)
    v = hist.slabs[: j.size]
    vm, vp = v[:, 0], v[:, 1]
    mids = (j - 0.5) * tg.dt
    if hist.kind == "flux":
        cm = np.array([p.dirichlet_value(-1, s) for s in mids])
        cp = np.array([p.dirichlet_value(+1, s) for s in mids])
        bnd = Sm @ vm + Dm @ cm - Sp @ vp - Dp @ cp
    else:
        am = np.array([p.robin_a(-1, s) for s in mids])
        ap = np.array([p.robin_a(+1, s) for s in mids])
        bm = np.array([p.robin_b(-1, s) for s in mids])
        bp = np.array([p.robin_b(+1, s) for s in mids])
        bnd = Sm @ (bm - am * vm) + Dm @ vm - Sp @ (bp - ap * vp) - Dp @ vp
    num = initial_layer(p, sg, xa, t) + source_layer(p, sg, tg, xa, t) - nu * bnd
    eps = np.where((np.abs(xa + L) < tol) | (np.abs(xa - L) < tol), 0.5, 1.0)
    out = num / eps
    return float(out) if np.ndim(out) == 0 else out


def solve_field(p: DiffusionProblem, sg: SpaceGrid, tg: TimeGrid, times, x=None):
    """March, then reconstruct on ``x`` (default: cell midpoints) at ``times``.

    Returns ``(FieldGrid, BoundaryHistory)``.
    """
    hist = march(p, sg, tg)
    x = sg.midpoints if x is None else np.asarray(x, dtype=float)
    vals = np.column_stack([reconstruct(p, sg, tg, hist, x, t) for t in times])
    return FieldGrid(x, np.asarray(times, dtype=float), vals, tag=f"{p.bc_kind}-stum"), hist
