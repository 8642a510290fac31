"""Discrete -Laplacian, gradient and fractional Laplacian of the extension.

The fractional Laplacian at an interior node x_i is assembled as one dense
row acting on nodal values:

* ``|z| <= h``: symmetric second difference, exact for the local quadratic
  through ``u_{i-1}, u_i, u_{i+1}``;
* the rest of the domain: exact moments of ``(u_i - u(y)) |x_i - y|^(-1-2s)``
  for the piecewise-linear ``u``;
* the exterior: ``(u_i - u~(y)) |x_i - y|^(-1-2s)`` on the exterior
  quadrature, with u~ from the extension matrix.

The diagonal is the total kernel mass actually used, so every row
annihilates constants to rounding.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ._accel import cell_moments, hat_weights_from_moments
from .extension import GridFunction, extension_matrix
from .geometry import Domain, Grid
from .kernels import ExteriorQuadrature, FracParams, QuadratureRule, exterior_quadrature

log = logging.getLogger(__name__)


def near_field_sets(x: float, d: Domain, r_near: float = 1.0) -> dict[int, list[tuple[float, float]]]:
    """Split ``{|z| <= r_near}`` by whether ``x + z`` and ``x - z`` lie in the domain.

    Returns the z-intervals of the four sets keyed 1..4:
    1 both in, 2 only ``x - z`` in, 3 only ``x + z`` in, 4 neither.
    """
    if d.kind != "interval":
        raise NotImplementedError("near-field classification is implemented for intervals")
    cuts = np.array([-r_near, r_near, d.a - x, d.b - x, x - d.b, x - d.a])
    cuts = np.unique(np.clip(cuts, -r_near, r_near))
    sets: dict[int, list[tuple[float, float]]] = {1: [], 2: [], 3: [], 4: []}
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        z = 0.5 * (lo + hi)
        plus_in = d.a < x + z < d.b
        minus_in = d.a < x - z < d.b
        key = 1 if plus_in and minus_in else 2 if minus_in else 3 if plus_in else 4
        sets[key].append((float(lo), float(hi)))
    return sets


def near_field_measures(x: float, d: Domain, r_near: float = 1.0) -> np.ndarray:
    sets = near_field_sets(x, d, r_near)
    return np.array([sum(hi - lo for lo, hi in sets[k]) for k in (1, 2, 3, 4)])


class Discretization:
    """Dense 1D operators on the closure nodes of an interval grid.

    Rows for the two boundary nodes are zero in every operator matrix; the
    solver owns the boundary closure.
    """

    def __init__(self, grid: Grid, p: FracParams, q: QuadratureRule | None = None):
        if grid.domain.kind != "interval":
            raise NotImplementedError("operators are implemented for intervals")
        if p.N != 1:
            raise ValueError("FracParams.N must be 1 on an interval")
        self.grid = grid
        self.p = p
        self.q = q or QuadratureRule()
        self.nodes = grid.nodes
        self.n_nodes = self.nodes.size
        self.h = grid.h

    @cached_property
    def exterior(self) -> ExteriorQuadrature:
        return exterior_quadrature(self.grid.domain, self.p.s, self.grid.R_trunc, self.q)

    @cached_property
    def exterior_extension(self) -> np.ndarray:
        """Maps nodal values to u~ at the exterior quadrature nodes."""
        E, _ = extension_matrix(self.exterior.points, self.grid, self.p)
        return E

    @cached_property
    def laplacian_matrix(self) -> np.ndarray:
        """``-u''`` by the three-point stencil."""
        n, h = self.n_nodes, self.h
        A = np.zeros((n, n))
        i = np.arange(1, n - 1)
        A[i, i - 1] = -1.0 / h**2
        A[i, i] = 2.0 / h**2
        A[i, i + 1] = -1.0 / h**2
        return A

    @cached_property
    def gradient_matrix(self) -> np.ndarray:
        n, h = self.n_nodes, self.h
        A = np.zeros((n, n))
        i = np.arange(1, n - 1)
        A[i, i - 1] = -0.5 / h
        A[i, i + 1] = 0.5 / h
        return A

    @cached_property
    def frac_matrix(self) -> np.ndarray:
        """``(-Delta)^s`` applied to the extension of the nodal values."""
        p, h, n = self.p, self.h, self.n_nodes
        s, alpha, C = p.s, p.alpha, p.C_Ns
        xi = self.nodes[1:-1]
        rows = np.arange(1, n - 1)

        # cells adjacent to x_i come back NaN and are covered by the near-field term
        W_int = hat_weights_from_moments(cell_moments(xi, self.grid.domain.a, h, self.grid.n_cells, alpha))
        ext = self.exterior
        Kq = np.abs(xi[:, None] - ext.points[None, :]) ** (-alpha) * ext.weights
        W_ext = Kq @ self.exterior_extension
        near = h ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s) / h**2

        M = np.zeros((n, n))
        M[1:-1] = -(W_int + W_ext)
        M[rows, rows - 1] -= near
        M[rows, rows + 1] -= near
        M[rows, rows] += W_int.sum(axis=1) + Kq.sum(axis=1) + 2.0 * near
        M *= C
        if log.isEnabledFor(logging.DEBUG):
            for x in (xi[0], xi[xi.size // 2], xi[-1]):
                log.debug("near-field set measures at x=%.4g: %s", x, near_field_measures(x, self.grid.domain, self.q.r_near))
            tail = Kq[:, ~ext.finite].sum() / Kq.sum()
            log.debug("exterior mass fraction beyond R_trunc=%g: %.3e", ext.R_trunc, tail)
        return M


@lru_cache(maxsize=32)
def discretization(grid: Grid, p: FracParams, q: QuadratureRule | None = None) -> Discretization:
    """Cached :class:`Discretization` per (grid, s, quadrature)."""
    return Discretization(grid, p, q)


def _node_index(grid: Grid, x) -> int:
    nodes = grid.nodes
    i = int(np.argmin(np.abs(nodes - x)))
    if abs(nodes[i] - x) > 1e-9 * grid.h:
        raise ValueError(f"{x} is not a grid node")
    if i == 0 or i == nodes.size - 1:
        raise ValueError("operators are evaluated at interior nodes")
    return i


def frac_laplacian_extended(u_ext: GridFunction, x: float, p: FracParams, q: QuadratureRule | None = None) -> float:
    """``(-Delta)^s u~`` at the interior node ``x``; ``u_ext`` must carry its extension."""
    u_ext.exterior_values(p)
    i = _node_index(u_ext.grid, x)
    return float(discretization(u_ext.grid, p, q).frac_matrix[i] @ u_ext.values)


def local_laplacian(u: GridFunction, x: float) -> float:
    """``-u''`` at an interior node (three-point stencil)."""
    i = _node_index(u.grid, x)
    v, h = u.values, u.grid.h
    return -(v[i + 1] - 2.0 * v[i] + v[i - 1]) / h**2


def gradient(u: GridFunction, x: float) -> float:
    """Centered ``u'`` at an interior node."""
    i = _node_index(u.grid, x)
    v, h = u.values, u.grid.h
    return (v[i + 1] - v[i - 1]) / (2.0 * h)


def w2p_surrogate(u: GridFunction, p: float = 2.0) -> float:
    """Discrete ``||u||_p + ||u'||_p + ||u''||_p`` on an interval grid."""
    v, h = u.values, u.grid.h
    w = np.full(v.size, h)
    w[[0, -1]] = 0.5 * h
    d1 = np.diff(v) / h
    d2 = np.diff(v, 2) / h**2

    def lp(vals, weights):
        return float(np.sum(weights * np.abs(vals) ** p) ** (1.0 / p))

    return lp(v, w) + lp(d1, np.full(d1.size, h)) + lp(d2, np.full(d2.size, h))


def lp_norm(values: np.ndarray, grid: Grid, p: float = 2.0) -> float:
    w = np.full(values.size, grid.h)
    w[[0, -1]] = 0.5 * grid.h
    return float(np.sum(w * np.abs(values) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class OperatorStencil:
    """The three operator matrices of one discretization."""

    laplacian: np.ndarray
    gradient: np.ndarray
    fractional: np.ndarray

    @classmethod
    def of(cls, disc: Discretization) -> "OperatorStencil":
        return cls(disc.laplacian_matrix, disc.gradient_matrix, disc.frac_matrix)
