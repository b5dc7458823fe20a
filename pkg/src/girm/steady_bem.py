"""Steady 2D diffusion by a second-kind boundary integral equation.

Solves ``nu * Laplace(C) + sigma = 0`` in a polygon with Robin data
``dC/dn + a C = b`` on the boundary, using constant elements collocated at
element midpoints.  With ``G = ln(r) / 2 pi`` the boundary equation is

    C_i / 2 = sum_j (a_j C_j - b_j) int_j G + sum_j C_j int_j dG/dn
              - (1/nu) int_Omega sigma G

and the same right-hand side evaluated off the boundary gives ``C`` inside
and 0 outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .kernels import log_kernel
from .quadrature import _legendre

__all__ = [
    "SteadyBemMesh",
    "RobinData",
    "SingularSystemError",
    "assemble_and_solve",
    "representation",
    "interior_value",
    "winding_number",
    "single_layer_matrix",
    "double_layer_matrix",
]

_GL_ORDER = 8
_TWO_PI = 2.0 * math.pi


class SingularSystemError(np.linalg.LinAlgError):
    pass


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = _cross(q2 - q1, p1 - q1)
    d2 = _cross(q2 - q1, p2 - q1)
    d3 = _cross(p2 - p1, q1 - p1)
    d4 = _cross(p2 - p1, q2 - p1)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class SteadyBemMesh:
    """Closed counter-clockwise polygon split into straight elements."""

    vertices: np.ndarray  # polygon corners, (V, 2)
    starts: np.ndarray  # element start points, (N, 2)
    ends: np.ndarray

    @classmethod
    def polygon(cls, vertices, per_side: int, grading: float = 2.0) -> "SteadyBemMesh":
        """Split each side into ``per_side`` elements.

        Nodes sit at ``s^q / (s^q + (1-s)^q)`` along each side; ``q = 1`` is
        uniform and the default ``q = 2`` clusters elements at the corners,
        which keeps midpoint-collocated constant elements second order there.
        """
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("need at least three 2D vertices")
        if per_side < 1:
            raise ValueError("need at least one element per side")
        if not grading >= 1.0:
            raise ValueError("grading exponent must be >= 1")
        V = len(v)
        area2 = np.sum(_cross(v, np.roll(v, -1, axis=0)))
        if area2 <= 0:
            raise ValueError("polygon must be counter-clockwise with positive area")
        for i in range(V):
            for j in range(i + 2, V):
                if i == 0 and j == V - 1:
                    continue
                if _segments_cross(v[i], v[(i + 1) % V], v[j], v[(j + 1) % V]):
                    raise ValueError("polygon edges intersect")
        u = np.linspace(0.0, 1.0, per_side + 1)
        s = u ** grading / (u ** grading + (1.0 - u) ** grading)
        starts, ends = [], []
        for i in range(V):
            a, b = v[i], v[(i + 1) % V]
            pts = a + np.outer(s, b - a)
            starts.append(pts[:-1])
            ends.append(pts[1:])
        return cls(v, np.vstack(starts), np.vstack(ends))

    @classmethod
    def unit_square(cls, n_elements: int, grading: float = 2.0) -> "SteadyBemMesh":
        if n_elements % 4:
            raise ValueError("unit square meshes need a multiple of 4 elements")
        return cls.polygon([[0, 0], [1, 0], [1, 1], [0, 1]], n_elements // 4, grading)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.starts + self.ends)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.ends - self.starts, axis=1)

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals (tangent rotated clockwise)."""
        t = self.ends - self.starts
        n = np.column_stack([t[:, 1], -t[:, 0]])
        return n / self.lengths[:, None]


Field = Union[float, Callable]


@dataclass(frozen=True)
class RobinData:
    """Boundary data ``dC/dn + a C = b`` and source ``sigma``.

    ``a`` and ``b`` are constants or callables ``f(points, normals)``;
    ``sigma`` is ``None`` or a callable ``f(points)``.
    """

    a: Field = 0.0
    b: Field = 0.0
    sigma: Optional[Callable] = None

    def _eval(self, f, pts, nrm):
        if callable(f):
            out = np.asarray(f(pts, nrm), dtype=float)
        else:
            out = np.full(len(pts), float(f))
        out = np.broadcast_to(out, (len(pts),)).astype(float)
        if not np.all(np.isfinite(out)):
            raise ValueError("Robin data must be finite at element midpoints")
        return out

    def on(self, mesh: SteadyBemMesh):
        pts, nrm = mesh.midpoints, mesh.normals
        return self._eval(self.a, pts, nrm), self._eval(self.b, pts, nrm)


def single_layer_matrix(mesh: SteadyBemMesh, points, self_mask: bool = False) -> np.ndarray:
    """``out[i, j] = int_{element j} G(xi, points[i]) dGamma(xi)``.

    With ``self_mask`` the points are the element midpoints and the diagonal
    uses the exact midpoint self-integral ``(h / 2 pi)(ln(h/2) - 1)``.
    """
    x = np.asarray(points, dtype=float)
    gx, gw = _legendre(_GL_ORDER)
    h = mesh.lengths
    # quadrature nodes per element, (N, Q, 2)
    nodes = mesh.starts[:, None, :] + 0.5 * (gx[None, :, None] + 1.0) * (mesh.ends - mesh.starts)[:, None, :]
    r = np.linalg.norm(nodes[None, :, :, :] - x[:, None, None, :], axis=-1)  # (P, N, Q)
    if self_mask:
        idx = np.arange(len(mesh))
        r[idx, idx, :] = 1.0  # placeholder, overwritten below
    out = (log_kernel(r) @ gw) * (0.5 * h)[None, :]
    if self_mask:
        out[idx, idx] = h / _TWO_PI * (np.log(h / 2.0) - 1.0)
    return out


def double_layer_matrix(mesh: SteadyBemMesh, points, self_mask: bool = False) -> np.ndarray:
    """``out[i, j] = int_{element j} dG/dn(xi) dGamma(xi)``, exactly.

    For a straight element this is the signed angle it subtends at the
    field point over 2 pi; the flat self-element contributes 0.
    """
    x = np.asarray(points, dtype=float)
    u = mesh.starts[None, :, :] - x[:, None, :]
    v = mesh.ends[None, :, :] - x[:, None, :]
    ang = np.arctan2(_cross(u, v), np.sum(u * v, axis=-1))
    out = ang / _TWO_PI
    if self_mask:
        idx = np.arange(len(mesh))
        out[idx, idx] = 0.0
    return out


def winding_number(mesh: SteadyBemMesh, points) -> np.ndarray:
    """Winding number of the boundary around each point (1 inside, 0 outside)."""
    return np.rint(np.sum(double_layer_matrix(mesh, points), axis=1)).astype(int)


def _domain_cells(mesh: SteadyBemMesh, n: int):
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    hx, hy = (hi - lo) / n
    cx = lo[0] + (np.arange(n) + 0.5) * hx
    cy = lo[1] + (np.arange(n) + 0.5) * hy
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    centres = np.column_stack([X.ravel(), Y.ravel()])
    inside = winding_number(mesh, centres) == 1
    return centres[inside], hx * hy


def _domain_term(mesh, data: RobinData, nu: float, points, cells: int) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if data.sigma is None:
        return np.zeros(len(x))
    centres, area = _domain_cells(mesh, cells)
    sig = np.asarray(data.sigma(centres), dtype=float)
    r = np.linalg.norm(centres[None, :, :] - x[:, None, :], axis=-1)
    r = np.where(r > 0, r, 1.0)  # a cell centre never coincides with a field point in practice
    return (log_kernel(r) @ sig) * area / nu


def assemble_and_solve(mesh: SteadyBemMesh, data: RobinData, nu: float, domain_cells: int = 64) -> np.ndarray:
    """Boundary values ``C`` at the element midpoints.

    With ``a = 0`` everywhere the solution is defined up to an additive
    constant and the minimum-norm one is returned.
    """
    if not nu > 0:
        raise ValueError("diffusion coefficient must be positive")
    xm = mesh.midpoints
    a, b = data.on(mesh)
    Gm = single_layer_matrix(mesh, xm, self_mask=True)
    Hm = double_layer_matrix(mesh, xm, self_mask=True)
    A = 0.5 * np.eye(len(mesh)) - Gm * a[None, :] - Hm
    rhs = -Gm @ b - _domain_term(mesh, data, nu, xm, domain_cells)
    if not np.any(a):
        # pure Neumann: C is fixed only up to a constant, which spans the null space;
        # the minimum-norm least-squares solution picks one representative
        return np.linalg.lstsq(A, rhs, rcond=1e-12)[0]
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystemError(f"boundary system is singular (condition estimate {cond:.3e})")
    return np.linalg.solve(A, rhs)


def representation(mesh, data: RobinData, nu: float, boundary_C, points, domain_cells: int = 64):
    """Right-hand side of the representation formula at off-boundary points:
    ``C(x)`` inside the polygon and 0 outside."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = data.on(mesh)
    C = np.asarray(boundary_C, dtype=float)
    G = single_layer_matrix(mesh, x)
    H = double_layer_matrix(mesh, x)
    out = G @ (a * C - b) + H @ C - _domain_term(mesh, data, nu, x, domain_cells)
    return out if np.ndim(points) > 1 else float(out[0])


def interior_value(mesh, data: RobinData, nu: float, boundary_C, x, domain_cells: int = 64):
    """``C`` at a point strictly inside the polygon."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.linalg.norm(mesh.starts[None] - pts[:, None], axis=-1)
    if np.any(winding_number(mesh, pts) != 1) or np.any(d == 0):
        raise ValueError("interior_value needs points strictly inside the boundary")
    # points on an element interior give a half-winding; reject them too
    wsum = np.sum(double_layer_matrix(mesh, pts), axis=1)
    if np.any(np.abs(wsum - 1.0) > 1e-9):
        raise ValueError("interior_value needs points strictly inside the boundary")
    return representation(mesh, data, nu, boundary_C, x, domain_cells)
