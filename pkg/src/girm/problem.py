"""Problem definition for 1D unsteady diffusion on ``(-L, +L)``.

Boundary data conventions:

* Dirichlet: ``C(-L, t) = g_minus(t)`` and ``C(+L, t) = g_plus(t)``.
* Neumann: ``dC/dx(-L, t) = -f_minus(t)`` and ``dC/dx(+L, t) = +f_plus(t)``,
  so ``f`` is the outward normal derivative at either end.
* Robin: ``dC/dx + a C = b`` at both ends, with ``a(x, t)`` and ``b(x, t)``
  evaluated at ``x = -L`` or ``x = +L``.  Neumann is the case ``a = 0`` with
  ``b(-L) = -f_minus`` and ``b(+L) = f_plus``.

``C0`` and ``sigma`` must accept numpy arrays of ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

BC_KINDS = ("dirichlet", "neumann", "robin")


def _zero_t(t):
    return 0.0


def _zero_xt(x, t):
    return 0.0


@dataclass(frozen=True)
class DiffusionProblem:
    nu: float
    L: float
    T: float
    C0: Callable
    bc_kind: str = "dirichlet"
    g_minus: Callable = _zero_t
    g_plus: Callable = _zero_t
    f_minus: Callable = _zero_t
    f_plus: Callable = _zero_t
    a: Callable = _zero_xt
    b: Callable = _zero_xt
    sigma: Optional[Callable] = None

    def __post_init__(self):
        for name in ("nu", "L", "T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.bc_kind not in BC_KINDS:
            raise ValueError(f"bc_kind must be one of {BC_KINDS}, got {self.bc_kind!r}")

    @property
    def has_source(self) -> bool:
        return self.sigma is not None

    def initial(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.C0(x), dtype=float), x.shape).astype(float)

    def source(self, x, t):
        x = np.asarray(x, dtype=float)
        if self.sigma is None:
            return np.zeros(x.shape)
        return np.broadcast_to(np.asarray(self.sigma(x, t), dtype=float), x.shape).astype(float)

    def robin_a(self, side: int, t: float) -> float:
        """``a`` at ``x = side * L`` (``side`` is -1 or +1)."""
        if self.bc_kind == "neumann":
            return 0.0
        return float(self.a(side * self.L, t))

    def robin_b(self, side: int, t: float) -> float:
        """Right-hand side of ``dC/dx + a C = b`` at ``x = side * L``."""
        if self.bc_kind == "neumann":
            return -float(self.f_minus(t)) if side < 0 else float(self.f_plus(t))
        return float(self.b(side * self.L, t))

    def dirichlet_value(self, side: int, t: float) -> float:
        return float(self.g_minus(t) if side < 0 else self.g_plus(t))

    def scaled(self, factor: float) -> "DiffusionProblem":
        """Same problem with every datum multiplied by ``factor``."""
        c0, gm, gp, fm, fp, b, sg = self.C0, self.g_minus, self.g_plus, self.f_minus, self.f_plus, self.b, self.sigma
        return replace(
            self,
            C0=lambda x: factor * np.asarray(c0(x), dtype=float),
            g_minus=lambda t: factor * gm(t),
            g_plus=lambda t: factor * gp(t),
            f_minus=lambda t: factor * fm(t),
            f_plus=lambda t: factor * fp(t),
            b=lambda x, t: factor * b(x, t),
            sigma=None if sg is None else (lambda x, t: factor * np.asarray(sg(x, t), dtype=float)),
        )


def paper_gaussian(L: float, sign: str = "minus") -> Callable:
    """Initial pulse ``exp(-(x / (L/8))^2)``; ``sign="plus"`` gives the
    literal growing exponential ``exp(+(x / (L/8))^2)``."""
    if sign not in ("minus", "plus"):
        raise ValueError(f"gaussian sign must be 'minus' or 'plus', got {sign!r}")
    s = -1.0 if sign == "minus" else 1.0
    w = L / 8.0
    return lambda x: np.exp(s * (np.asarray(x, dtype=float) / w) ** 2)


def single_mode(L: float, kind: str) -> Callable:
    """First eigenmode: sine for Dirichlet, cosine for Neumann."""
    k = math.pi / (2.0 * L)
    if kind == "neumann":
        return lambda x: np.cos(k * (np.asarray(x, dtype=float) + L))
    return lambda x: np.sin(k * (np.asarray(x, dtype=float) + L))


def constant(value: float) -> Callable:
    return lambda x: np.full(np.shape(x), float(value))


@dataclass
class FieldGrid:
    """Sampled field ``values[i, j] = C(x[i], times[j])``."""

    x: np.ndarray
    times: np.ndarray
    values: np.ndarray
    tag: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.times.size):
            raise ValueError(f"values shape {self.values.shape} does not match grids "
                             f"({self.x.size}, {self.times.size})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def snapshot(self, t: float) -> np.ndarray:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t!r}")
        return self.values[:, j]
