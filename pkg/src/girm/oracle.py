"""Exact series solutions and an independent finite-difference reference.

The Dirichlet solution is a linear lift of the boundary data plus a sine
series in ``(x + L)``; the Neumann solution is a quadratic lift plus a
cosine series.  Mode amplitudes obey
``dA_n/dt + nu k_n^2 A_n = forcing_n(t)`` with ``k_n = n pi / (2L)`` and are
advanced exactly: decay of the initial amplitude plus a trapezoid
convolution of the forcing (skipped when the forcing vanishes, as it does
for constant boundary data with no lift curvature).

Only homogeneous sources are handled by the series; ``fdm_reference``
covers ``sigma != 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import DiffusionProblem, FieldGrid
from .quadrature import QuadratureRule, nodes_and_weights

__all__ = [
    "FourierOracle",
    "project_sine",
    "project_cosine",
    "mode_decay",
    "dirichlet_exact",
    "neumann_exact",
    "fdm_reference",
    "DEFAULT_MODES",
]

DEFAULT_MODES = 128
_CONV_STEP = 1e-3
_CHUNK = 64


def _projection(f, modes: np.ndarray, L: float, basis) -> np.ndarray:
    top = max(int(modes.max()), 1)
    rule = QuadratureRule("gauss-legendre", panels=8 * top, order=8)
    x, w = nodes_and_weights(-L, L, rule)
    fw = np.asarray(f(x), dtype=float) * w
    y = x + L
    out = np.empty(modes.size)
    for start in range(0, modes.size, _CHUNK):
        m = modes[start:start + _CHUNK]
        out[start:start + _CHUNK] = basis(np.outer(m * math.pi / (2.0 * L), y)) @ fw
    return out


def project_sine(f, N: int, L: float) -> np.ndarray:
    """``c_m = (1/L) int f(x) sin(m pi (x+L) / 2L) dx`` for ``m = 1..N``."""
    if N < 1:
        raise ValueError("sine projection needs N >= 1")
    return _projection(f, np.arange(1, N + 1), L, np.sin) / L


def project_cosine(f, N: int, L: float) -> np.ndarray:
    """Cosine coefficients for ``m = 0..N``; the mean term carries the extra 1/2."""
    if N < 0:
        raise ValueError("cosine projection needs N >= 0")
    c = _projection(f, np.arange(0, N + 1), L, np.cos) / L
    c[0] *= 0.5
    return c


def mode_decay(n, t: float, nu: float, L: float):
    """``exp(-nu (n pi / 2L)^2 t) H(t)``."""
    n = np.asarray(n, dtype=float)
    if t < 0:
        return np.zeros(n.shape)
    return np.exp(-nu * (n * math.pi / (2.0 * L)) ** 2 * t)


def _ddt(g, t, h=1e-6):
    return (g(t + h) - g(t - h)) / (2.0 * h)


@dataclass
class FourierOracle:
    """Series solution for a Dirichlet or Neumann problem.

    Build with :meth:`build`; evaluate with ``oracle(x, t)``.
    """

    problem: DiffusionProblem
    N: int
    modes: np.ndarray
    c: np.ndarray
    lift_minus: np.ndarray
    lift_plus: np.ndarray
    conv_step: float = _CONV_STEP

    @classmethod
    def build(cls, problem: DiffusionProblem, N: int = DEFAULT_MODES, conv_step: float = _CONV_STEP):
        L = problem.L
        if problem.has_source:
            raise ValueError("series oracle covers sigma = 0 only; use fdm_reference")
        if problem.bc_kind == "dirichlet":
            modes = np.arange(1, N + 1)
            c = project_sine(problem.initial, N, L)
            lm = project_sine(lambda x: L - x, N, L)
            lp = project_sine(lambda x: L + x, N, L)
        elif problem.bc_kind == "neumann":
            modes = np.arange(0, N + 1)
            c = project_cosine(problem.initial, N, L)
            lm = project_cosine(lambda x: (L - x) ** 2, N, L)
            lp = project_cosine(lambda x: (L + x) ** 2, N, L)
        else:
            raise ValueError(f"no series oracle for {problem.bc_kind!r} boundaries")
        return cls(problem, N, modes, c, lm, lp, conv_step)

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.modes * math.pi / (2.0 * self.problem.L)

    def decay(self, t: float) -> np.ndarray:
        return mode_decay(self.modes, t, self.problem.nu, self.problem.L)

    def _boundary(self, t):
        p = self.problem
        if p.bc_kind == "dirichlet":
            return float(p.g_minus(t)), float(p.g_plus(t))
        return float(p.f_minus(t)), float(p.f_plus(t))

    def _scale(self) -> float:
        L = self.problem.L
        return 1.0 / (2.0 * L) if self.problem.bc_kind == "dirichlet" else 1.0 / (4.0 * L)

    def _forcing(self, tau: np.ndarray) -> np.ndarray:
        """Mode forcing sampled on ``tau``; shape ``(len(tau), n_modes)``."""
        p = self.problem
        if p.bc_kind == "dirichlet":
            dm = np.array([_ddt(p.g_minus, s) for s in tau])
            dp = np.array([_ddt(p.g_plus, s) for s in tau])
        else:
            dm = np.array([_ddt(p.f_minus, s) for s in tau])
            dp = np.array([_ddt(p.f_plus, s) for s in tau])
        forcing = -self._scale() * (np.outer(dm, self.lift_minus) + np.outer(dp, self.lift_plus))
        if p.bc_kind == "neumann":
            # the quadratic lift has curvature (f_- + f_+) / 2L, which feeds the mean mode
            fm = np.array([float(p.f_minus(s)) for s in tau])
            fp = np.array([float(p.f_plus(s)) for s in tau])
            forcing[:, 0] += p.nu * (fm + fp) / (2.0 * p.L)
        return forcing

    def amplitudes(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("oracle time must be >= 0")
        bm0, bp0 = self._boundary(0.0)
        s = self._scale()
        amp0 = self.c - s * (bm0 * self.lift_minus + bp0 * self.lift_plus)
        amp = amp0 * self.decay(t)
        if t > 0:
            n = max(1, math.ceil(t / self.conv_step))
            tau = np.linspace(0.0, t, n + 1)
            forcing = self._forcing(tau)
            if np.any(forcing != 0.0):
                kern = np.exp(-self.problem.nu * np.outer(t - tau, self.wavenumbers ** 2))
                w = np.full(n + 1, t / n)
                w[0] = w[-1] = 0.5 * t / n
                amp = amp + w @ (kern * forcing)
        return amp

    def __call__(self, x, t: float):
        p = self.problem
        L = p.L
        xa = np.asarray(x, dtype=float)
        if np.any(xa < -L - 1e-12) or np.any(xa > L + 1e-12):
            raise ValueError("oracle evaluation point outside [-L, L]")
        bm, bp = self._boundary(t)
        if p.bc_kind == "dirichlet":
            lift = bm * (L - xa) / (2.0 * L) + bp * (L + xa) / (2.0 * L)
            basis = np.sin
        else:
            lift = bm * (L - xa) ** 2 / (4.0 * L) + bp * (L + xa) ** 2 / (4.0 * L)
            basis = np.cos
        amp = self.amplitudes(t)
        phase = np.multiply.outer(xa + L, self.wavenumbers)
        out = lift + basis(phase) @ amp
        return float(out) if np.ndim(out) == 0 else out

    def field(self, x, times) -> FieldGrid:
        x = np.asarray(x, dtype=float)
        vals = np.column_stack([self(x, t) for t in times])
        return FieldGrid(x, np.asarray(times, dtype=float), vals, tag=f"{self.problem.bc_kind}-exact")


def dirichlet_exact(p: DiffusionProblem, N: int, x, t: float):
    if p.bc_kind != "dirichlet":
        raise ValueError("dirichlet_exact needs a Dirichlet problem")
    return FourierOracle.build(p, N)(x, t)


def neumann_exact(p: DiffusionProblem, N: int, x, t: float):
    if p.bc_kind != "neumann":
        raise ValueError("neumann_exact needs a Neumann problem")
    return FourierOracle.build(p, N)(x, t)


def fdm_reference(p: DiffusionProblem, Mf: int, dtf: float, times) -> FieldGrid:
    """Explicit central-difference march on ``Mf + 1`` nodes.

    Neumann ends use ghost nodes, ``C[-1] = C[1] + 2 dx f_minus`` and
    ``C[M+1] = C[M-1] + 2 dx f_plus``, which makes the trapezoid-weighted
    mass exactly conserved when ``f = 0`` and ``sigma = 0``.
    """
    if p.bc_kind not in ("dirichlet", "neumann"):
        raise ValueError("fdm_reference handles Dirichlet and Neumann problems")
    if Mf < 2:
        raise ValueError("need at least two cells")
    dx = 2.0 * p.L / Mf
    if not 0 < dtf <= 0.4 * dx * dx / p.nu * (1 + 1e-12):
        raise ValueError(f"dtf={dtf!r} violates explicit stability bound {0.4 * dx * dx / p.nu!r}")
    times = np.asarray(sorted(times), dtype=float)
    x = np.linspace(-p.L, p.L, Mf + 1)
    C = p.initial(x).copy()
    nu = p.nu
    dirichlet = p.bc_kind == "dirichlet"

    def rate(C, t):
        lap = np.empty_like(C)
        lap[1:-1] = C[2:] - 2.0 * C[1:-1] + C[:-2]
        if dirichlet:
            lap[0] = lap[-1] = 0.0
        else:
            lap[0] = 2.0 * (C[1] - C[0]) + 2.0 * dx * float(p.f_minus(t))
            lap[-1] = 2.0 * (C[-2] - C[-1]) + 2.0 * dx * float(p.f_plus(t))
        r = nu * lap / (dx * dx)
        if p.has_source:
            r = r + p.source(x, t)
        if dirichlet:
            r[0] = r[-1] = 0.0
        return r

    out = np.empty((x.size, times.size))
    t = 0.0
    for j, target in enumerate(times):
        while target - t > 1e-14 * max(1.0, target):
            h = min(dtf, target - t)
            C = C + h * rate(C, t)
            t = t + h if target - (t + h) > 1e-14 * max(1.0, target) else target
            if dirichlet:
                C[0] = p.dirichlet_value(-1, t)
                C[-1] = p.dirichlet_value(+1, t)
        out[:, j] = C
    return FieldGrid(x, times, out, tag=f"{p.bc_kind}-fdm")
