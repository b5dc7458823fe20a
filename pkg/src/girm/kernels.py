"""Fundamental solutions of the diffusion and Laplace operators.

The heat kernel functions take a signed distance ``d = x - xi`` and an
elapsed time ``s = t - tau`` and vanish identically for ``s <= 0``.  The
``slab_*`` functions return exact time integrals of the 1D single- and
double-layer kernels over an elapsed-time window ``[s1, s2]``; the
``1/sqrt(s)`` endpoint singularity is absorbed by the closed form.

Everything here is a pure function and accepts numpy arrays wherever a
scalar distance or time is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

__all__ = [
    "KernelParams",
    "heat_kernel",
    "heat_kernel_dx",
    "slab_single_layer",
    "slab_double_layer",
    "log_kernel",
    "log_kernel_dn",
]

_SQRT_PI = math.sqrt(math.pi)
# exp(-z) underflows to 0 beyond this exponent
_EXP_UNDERFLOW = 745.0
# erfc(z) < 1e-300 beyond this argument
_ERFC_CUTOFF = 27.0


@dataclass(frozen=True)
class KernelParams:
    nu: float

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"diffusion coefficient must be positive, got {self.nu!r}")


def _nu(p) -> float:
    return p.nu if isinstance(p, KernelParams) else KernelParams(float(p)).nu


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel arguments must be finite")


def _scalar_or_array(out, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(out)
    return out


def heat_kernel(d, s, p, n: int = 1):
    """Heat kernel ``(4 pi nu s)^(-n/2) exp(-d^2 / (4 nu s)) H(s)``.

    For ``n >= 2`` pass the Euclidean distance ``|x - xi|`` as ``d``.
    Values whose exponent exceeds 745 underflow to exactly 0.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"space dimension must be 1, 2 or 3, got {n!r}")
    nu = _nu(p)
    d_arr = np.asarray(d, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    _check_finite(d_arr, s_arr)
    d_b, s_b = np.broadcast_arrays(d_arr, s_arr)
    out = np.zeros(d_b.shape)
    live = s_b > 0
    if np.any(live):
        sl = s_b[live]
        expo = d_b[live] ** 2 / (4.0 * nu * sl)
        val = (4.0 * math.pi * nu * sl) ** (-0.5 * n) * np.exp(-np.minimum(expo, _EXP_UNDERFLOW + 1))
        val[expo > _EXP_UNDERFLOW] = 0.0
        out[live] = val
    return _scalar_or_array(out, d, s)


def heat_kernel_dx(d, s, p):
    """x-derivative of the 1D heat kernel, ``-d / (2 nu s) * G``."""
    nu = _nu(p)
    d_arr = np.asarray(d, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    g = np.asarray(heat_kernel(d_arr, s_arr, nu, 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s_arr > 0, -d_arr / (2.0 * nu * np.where(s_arr > 0, s_arr, 1.0)) * g, 0.0)
    return _scalar_or_array(out, d, s)


def _check_window(s1, s2):
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    _check_finite(s1, s2)
    if np.any(s1 < 0):
        raise ValueError("elapsed-time window must start at s1 >= 0")
    if np.any(s2 < s1):
        raise ValueError("elapsed-time window needs s2 >= s1")
    return s1, s2


def _single_antiderivative(a, s, nu):
    # 2 sqrt(s) [exp(-x^2) - sqrt(pi) x erfc(x)] / sqrt(4 pi nu),  x = a / sqrt(s)
    out = np.zeros(np.broadcast(a, s).shape)
    a_b, s_b = np.broadcast_arrays(a, s)
    live = s_b > 0
    if np.any(live):
        rs = np.sqrt(s_b[live])
        # past x = 28 the value is below 1e-300; clipping keeps x^2 finite
        x = np.minimum(a_b[live] / rs, 28.0)
        # exp(-x^2) (1 - sqrt(pi) x erfcx(x)) avoids the erfc underflow pairing
        h = np.exp(-np.minimum(x * x, _EXP_UNDERFLOW + 1)) * (1.0 - _SQRT_PI * x * erfcx(x))
        h[x * x > _EXP_UNDERFLOW] = 0.0
        out[live] = 2.0 * rs * h / math.sqrt(4.0 * math.pi * nu)
    return out


def slab_single_layer(d, s1, s2, p):
    """Exact ``int_{s1}^{s2} heat_kernel(d, s) ds`` for ``0 <= s1 <= s2``."""
    nu = _nu(p)
    s1a, s2a = _check_window(s1, s2)
    d_arr = np.asarray(d, dtype=float)
    _check_finite(d_arr)
    a = np.abs(d_arr) / (2.0 * math.sqrt(nu))
    out = _single_antiderivative(a, s2a, nu) - _single_antiderivative(a, s1a, nu)
    return _scalar_or_array(out, d, s1, s2)


def _erfc_of_ratio(a, s):
    # erfc(a / sqrt(s)), with erfc(a / 0) = 0 for a > 0 and 1 for a = 0
    a_b, s_b = np.broadcast_arrays(a, s)
    out = np.where(a_b > 0, 0.0, 1.0)
    live = s_b > 0
    if np.any(live):
        x = a_b[live] / np.sqrt(s_b[live])
        out[live] = np.where(x > _ERFC_CUTOFF, 0.0, erfc(x))
    return out


def slab_double_layer(d, s1, s2, p):
    """Exact ``int_{s1}^{s2} heat_kernel_dx(d, s) ds``; exactly 0 at ``d = 0``."""
    nu = _nu(p)
    s1a, s2a = _check_window(s1, s2)
    d_arr = np.asarray(d, dtype=float)
    _check_finite(d_arr)
    a = np.abs(d_arr) / (2.0 * math.sqrt(nu))
    jump = _erfc_of_ratio(a, s2a) - _erfc_of_ratio(a, s1a)
    out = -np.sign(d_arr) / (2.0 * nu) * jump
    return _scalar_or_array(out, d, s1, s2)


def log_kernel(r):
    """Free-space Laplace kernel ``ln(r) / (2 pi)``."""
    r_arr = np.asarray(r, dtype=float)
    _check_finite(r_arr)
    if np.any(r_arr <= 0):
        raise ValueError("log kernel needs r > 0; use the analytic self-element integral")
    return _scalar_or_array(np.log(r_arr) / (2.0 * math.pi), r)


def log_kernel_dn(x, xi, n_xi):
    """Normal derivative of the log kernel with respect to the source point.

    ``x`` may be a single point ``(2,)`` or a stack ``(..., 2)``; the result
    is ``((xi - x) . n_xi) / (2 pi |xi - x|^2)``.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n_xi = np.asarray(n_xi, dtype=float)
    _check_finite(x, xi, n_xi)
    diff = xi - x
    r2 = np.sum(diff * diff, axis=-1)
    if np.any(r2 == 0):
        raise ValueError("log kernel normal derivative is singular at coincident points")
    out = np.sum(diff * n_xi, axis=-1) / (2.0 * math.pi * r2)
    return float(out) if np.ndim(out) == 0 else out
