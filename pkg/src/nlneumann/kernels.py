"""Singular kernel, normalization constant, boundary factor and regional kernel.

Exterior integrals over the complement of an interval are done with an
:class:`ExteriorQuadrature`: Gauss-Legendre panels graded geometrically
toward the boundary out to ``R_trunc``, and beyond that the substitution
``d = R_trunc / t`` with Gauss-Jacobi weights ``t**(2s-1)``, which absorbs the
``d**(-1-2s)`` decay of every integrand used here.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import roots_jacobi

from ._accel import _power_integral_np
from .geometry import Domain

log = logging.getLogger(__name__)


def normalization_constant(N: int, s: float) -> float:
    """``pi^(-N/2) 2^(2s) s Gamma(N/2 + s) / Gamma(1 - s)``."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if N < 1:
        raise ValueError("N must be a positive integer")
    lg = math.lgamma(N / 2 + s) - math.lgamma(1.0 - s)
    return math.pi ** (-N / 2) * 4.0**s * s * math.exp(lg)


@dataclass(frozen=True)
class FracParams:
    s: float
    N: int = 1

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.N not in (1, 2):
            raise ValueError(f"N must be 1 or 2, got {self.N}")

    @cached_property
    def C_Ns(self) -> float:
        return normalization_constant(self.N, self.s)

    @property
    def alpha(self) -> float:
        """Kernel exponent ``N + 2s``."""
        return self.N + 2.0 * self.s


@dataclass(frozen=True)
class QuadratureRule:
    """Resolution knobs for every singular/exterior integral.

    ``r_near`` is the near/far split radius of the fractional Laplacian;
    ``panel_points`` Gauss points per exterior panel; panels double in width
    from ``floor_rel * diam`` out to ``R_trunc``; ``tail_points`` Gauss-Jacobi
    nodes beyond ``R_trunc``; ``angular_points`` per panel in the disk
    boundary-factor integral.
    """

    r_near: float = 1.0
    panel_points: int = 10
    ratio: float = 2.0
    floor_rel: float = 1e-11
    tail_points: int = 24
    angular_points: int = 16

    def refined(self) -> "QuadratureRule":
        return QuadratureRule(
            r_near=self.r_near,
            panel_points=2 * self.panel_points,
            ratio=math.sqrt(self.ratio),
            floor_rel=self.floor_rel * 1e-2,
            tail_points=2 * self.tail_points,
            angular_points=2 * self.angular_points,
        )


@lru_cache(maxsize=64)
def _gauss01(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def _jacobi_tail(m: int, beta: float):
    x, w = roots_jacobi(m, 0.0, beta)
    t = 0.5 * (1.0 + x)
    return t, w * 2.0 ** (-beta - 1.0)


@dataclass(frozen=True, eq=False)
class ExteriorQuadrature:
    """Nodes/weights on ``R \\ Omega`` for an interval.

    ``points`` are positions, ``delta`` distances to the boundary,
    ``weights`` positive weights, ``finite`` marks nodes with
    ``delta <= R_trunc`` (the rest carry the mapped tail).
    """

    points: np.ndarray
    delta: np.ndarray
    weights: np.ndarray
    finite: np.ndarray
    R_trunc: float

    @property
    def size(self) -> int:
        return self.points.size


def _one_side(s: float, diam: float, R_trunc: float, q: QuadratureRule, coord: float = 1.0):
    gx, gw = _gauss01(q.panel_points)
    # keep the innermost nodes resolvable next to boundary coordinates of size coord
    floor = max(q.floor_rel * diam, 1e3 * np.finfo(float).eps * coord)
    edges = [0.0, floor]
    while edges[-1] * q.ratio < R_trunc * (1.0 - 1e-12):
        edges.append(edges[-1] * q.ratio)
    edges.append(R_trunc)
    edges = np.asarray(edges)
    lo, width = edges[:-1], np.diff(edges)
    d = (lo[:, None] + width[:, None] * gx).ravel()
    w = (width[:, None] * gw).ravel()
    t, wj = _jacobi_tail(q.tail_points, 2.0 * s - 1.0)
    d_tail = R_trunc / t
    w_tail = wj * R_trunc * t ** (-1.0 - 2.0 * s)
    return (
        np.concatenate([d, d_tail]),
        np.concatenate([w, w_tail]),
        np.concatenate([np.ones(d.size, bool), np.zeros(d_tail.size, bool)]),
    )


def exterior_quadrature(d: Domain, s: float, R_trunc: float | None = None, q: QuadratureRule | None = None) -> ExteriorQuadrature:
    if d.kind != "interval":
        raise NotImplementedError("exterior quadrature is implemented for intervals")
    q = q or QuadratureRule()
    R = 8.0 * d.diameter if R_trunc is None else float(R_trunc)
    dd, ww, fin = _one_side(s, d.diameter, R, q, max(abs(d.a), abs(d.b), d.diameter))
    points = np.concatenate([d.a - dd[::-1], d.b + dd])
    return ExteriorQuadrature(
        points=points,
        delta=np.concatenate([dd[::-1], dd]),
        weights=np.concatenate([ww[::-1], ww]),
        finite=np.concatenate([fin[::-1], fin]),
        R_trunc=R,
    )


def _exterior_or_raise(x, d: Domain) -> np.ndarray:
    sd = d.signed_distance(x)
    if np.any(sd <= 0.0):
        raise ValueError("point must lie strictly outside the closed domain")
    return sd


def _disk_tail(r0: float, R: float, tau: float, q: QuadratureRule) -> float:
    # polar coordinates about x; psi parametrizes the chord offset u = R sin(psi)
    delta = r0 - R
    gx, gw = _gauss01(q.angular_points)
    psi0 = min(0.05 * math.sqrt(delta / R), math.pi / 4)
    edges = [0.0, psi0]
    while edges[-1] * 2.0 < math.pi / 2:
        edges.append(edges[-1] * 2.0)
    edges.append(math.pi / 2)
    edges = np.asarray(edges)
    psi = (edges[:-1, None] + np.diff(edges)[:, None] * gx).ravel()
    wpsi = (np.diff(edges)[:, None] * gw).ravel()
    u = R * np.sin(psi)
    cos_th = np.sqrt(1.0 - (u / r0) ** 2)
    rho_p = r0 * cos_th + R * np.cos(psi)
    rho_m = (r0 - R) * (r0 + R) / rho_p
    inner = _power_integral_np(rho_m, rho_p - rho_m, -tau)
    jac = R * np.cos(psi) / (r0 * cos_th)
    return float(2.0 * np.sum(wpsi * inner * jac))


def general_tail_integral(x, tau: float, d: Domain, q: QuadratureRule | None = None):
    """``int_Omega |x - y|^(-N - tau) dy`` for exterior ``x``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    sd = _exterior_or_raise(x, d)
    if d.kind == "interval":
        out = _power_integral_np(np.asarray(sd, float), d.length, -tau)
        return float(out) if np.ndim(out) == 0 else out
    q = q or QuadratureRule()
    r0 = np.atleast_1d(sd + d.radius)
    out = np.array([_disk_tail(float(r), d.radius, tau, q) for r in r0])
    return float(out[0]) if np.ndim(sd) == 0 else out


def boundary_factor(x, d: Domain, p: FracParams, q: QuadratureRule | None = None):
    """``F(x) = int_Omega |x - y|^(-N - 2s) dy`` for exterior ``x``."""
    if p.N != d.dimension:
        raise ValueError("FracParams.N does not match the domain dimension")
    return general_tail_integral(x, 2.0 * p.s, d, q)


def regional_kernel_matrix(xs, ys, d: Domain, p: FracParams, ext: ExteriorQuadrature) -> np.ndarray:
    """``k_Omega(x_i, y_j)`` (the exterior part only) for 1D point sets."""
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = np.atleast_1d(np.asarray(ys, float))
    F = _power_integral_np(ext.delta, d.length, -2.0 * p.s)
    Kx = np.abs(xs[:, None] - ext.points[None, :]) ** (-p.alpha)
    Ky = np.abs(ys[:, None] - ext.points[None, :]) ** (-p.alpha)
    return (Kx * (ext.weights / F)) @ Ky.T


def regional_kernel(x: float, y: float, d: Domain, p: FracParams, q: QuadratureRule | None = None,
                    R_trunc: float | None = None) -> float:
    """``K_Omega(x, y) = |x - y|^(-1-2s) + k_Omega(x, y)`` for interior ``x != y``."""
    if d.kind != "interval":
        raise NotImplementedError("regional kernel is implemented for intervals")
    if not (d.contains(x) and d.contains(y)):
        raise ValueError("regional kernel needs interior points")
    if x == y:
        raise ValueError("regional kernel is not defined on the diagonal")
    ext = exterior_quadrature(d, p.s, R_trunc, q)
    k = regional_kernel_matrix([x], [y], d, p, ext)[0, 0]
    if log.isEnabledFor(logging.DEBUG):
        kt = regional_kernel_matrix([x], [y], d, p, _tail_only(ext))[0, 0]
        log.debug("k_Omega(%g, %g): tail beyond R_trunc=%g carries %.3e of %.3e", x, y, ext.R_trunc, kt, k)
    return abs(x - y) ** (-p.alpha) + k


def _tail_only(ext: ExteriorQuadrature) -> ExteriorQuadrature:
    m = ~ext.finite
    return ExteriorQuadrature(ext.points[m], ext.delta[m], ext.weights[m], ext.finite[m], ext.R_trunc)
