"""The kernel-weighted extension u -> u~, the nonlocal normal derivative, and
the exterior gradient-rate measurement.

Grid functions are piecewise linear in the closure nodes.  Outside the
domain u~(x) is the average of u against ``|x - y|^(-1-2s)``, which with hat
functions is a fixed linear combination of nodal values; the weights are
exact cell moments (see ``_accel.cell_moments``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, stats
from scipy.integrate import IntegrationWarning, quad

from ._accel import cell_moments, hat_weights_from_moments
from .geometry import Domain, Grid
from .kernels import FracParams, QuadratureRule, boundary_factor


class StaleExtensionError(RuntimeError):
    """Exterior values were built for other (s, grid, R_trunc) settings."""


def _cache_tag(grid: Grid, p: FracParams) -> tuple:
    return (p.s, grid.R_trunc, grid.h, grid.nodes.size, id(grid))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on the closed domain, plus optional exterior values.

    ``values`` are ordered like ``grid.nodes``; ``exterior`` like
    ``grid.exterior``.  The exterior cache is tagged with the settings that
    produced it and is rejected if read back with other settings.
    """

    grid: Grid
    values: np.ndarray
    exterior: np.ndarray | None = None
    tag: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.nodes.shape[0],):
            raise ValueError(f"expected {self.grid.nodes.shape[0]} nodal values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, func) -> "GridFunction":
        return cls(grid, np.asarray(func(grid.nodes), dtype=float) * np.ones(grid.nodes.shape[0]))

    @property
    def has_exterior(self) -> bool:
        return self.exterior is not None

    def exterior_values(self, p: FracParams) -> np.ndarray:
        if self.exterior is None:
            raise StaleExtensionError("grid function has no exterior values; call extend() first")
        if self.tag != _cache_tag(self.grid, p):
            raise StaleExtensionError(f"exterior values were built for tag {self.tag}, requested s={p.s}")
        return self.exterior

    def with_values(self, values) -> "GridFunction":
        """Same grid, new nodal values, cache dropped."""
        return GridFunction(self.grid, values)

    def with_exterior(self, exterior, p: FracParams) -> "GridFunction":
        ext = np.asarray(exterior, dtype=float)
        if ext.shape != (self.grid.exterior.shape[0],):
            raise ValueError("exterior values must match grid.exterior")
        return replace(self, exterior=ext, tag=_cache_tag(self.grid, p))

    def __call__(self, x):
        """Piecewise-linear interpolant on the closed domain."""
        return np.interp(x, self.grid.nodes, self.values)


def _require_interval(grid: Grid):
    if grid.domain.kind != "interval":
        raise NotImplementedError("the extension operator is implemented for intervals")


def hat_weights(points, grid: Grid, p: FracParams) -> np.ndarray:
    """``W[k, j] = int_Omega phi_j(y) |x_k - y|^(-1-2s) dy`` for exterior ``x_k``."""
    _require_interval(grid)
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any(grid.domain.contains(pts)) or np.any(grid.domain.signed_distance(pts) == 0.0):
        raise ValueError("hat weights are only defined at exterior points")
    mom = cell_moments(pts, grid.domain.a, grid.h, grid.n_cells, p.alpha)
    return hat_weights_from_moments(mom)


def extension_matrix(points, grid: Grid, p: FracParams) -> tuple[np.ndarray, np.ndarray]:
    """Rows map nodal values to u~ at ``points``; also returns F at those points."""
    W = hat_weights(points, grid, p)
    F = W.sum(axis=1)
    return W / F[:, None], F


def extend(u: GridFunction, d: Domain | None = None, p: FracParams | None = None,
           q: QuadratureRule | None = None) -> GridFunction:
    """Fill the exterior cache of ``u`` with the weighted-average extension."""
    if p is None:
        raise ValueError("extend needs FracParams")
    if d is not None and d != u.grid.domain:
        raise ValueError("domain does not match the grid")
    E, _ = extension_matrix(u.grid.exterior, u.grid, p)
    return u.with_exterior(E @ u.values, p)


def _exterior_value(u_ext: GridFunction, x: float, p: FracParams) -> float:
    ext = u_ext.exterior_values(p)
    hit = np.flatnonzero(u_ext.grid.exterior == x)
    if hit.size:
        return float(ext[hit[0]])
    E, _ = extension_matrix([x], u_ext.grid, p)
    return float(E[0] @ u_ext.values)


def reference_moment(func, x: float, d: Domain, p: FracParams) -> float:
    """``int_Omega func(y) |x - y|^(-1-2s) dy`` by adaptive quadrature."""
    a, b = d.a, d.b
    # substitute r = |x - y| so the endpoint peak sits at r = delta
    if x > b:
        g = lambda r: func(x - r) * r ** (-p.alpha)
        lo, hi = x - b, x - a
    else:
        g = lambda r: func(x + r) * r ** (-p.alpha)
        lo, hi = a - x, b - x
    pts = lo + (hi - lo) * np.array([1e-6, 1e-4, 1e-2, 0.1]) if hi - lo > 0 else None
    with warnings.catch_warnings():
        # quad flags roundoff when it cannot reach 1e-13; the result is still accurate to ~1e-12
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(g, lo, hi, points=pts, limit=400, epsabs=0.0, epsrel=1e-13)
    return val


def neumann_derivative(u_ext: GridFunction, x: float, p: FracParams, q: QuadratureRule | None = None,
                       interior=None) -> float:
    """``C_{N,s} int_Omega (u~(x) - u(y)) |x - y|^(-1-2s) dy`` at exterior ``x``.

    The interior integral uses the piecewise-linear representation of
    ``u_ext`` unless ``interior`` (a callable on the domain) is given, in
    which case it is integrated adaptively; that measures how far the
    discrete extension is from the one of the underlying smooth function.
    """
    grid = u_ext.grid
    _require_interval(grid)
    d = grid.domain
    if grid.domain.signed_distance(x) <= 0.0:
        raise ValueError("nonlocal normal derivative is evaluated at exterior points only")
    ux = _exterior_value(u_ext, float(x), p)
    F = boundary_factor(float(x), d, p)
    if interior is None:
        W = hat_weights([x], grid, p)[0]
        Pu = float(W @ u_ext.values)
        F = float(W.sum())
    else:
        Pu = reference_moment(interior, float(x), d, p)
    return p.C_Ns * (ux * F - Pu)


@dataclass
class RateFit:
    """Fitted exponent of ``|grad u~|`` against ``delta`` along an outward ray."""

    slope: float
    stderr: float
    band: tuple[float, float]
    deltas: np.ndarray
    gradients: np.ndarray
    flat: bool = False
    bound_constant: float = float("nan")
    aic_power: float = float("nan")
    aic_log: float = float("nan")

    @property
    def log_model_preferred(self) -> bool:
        return bool(self.aic_log < self.aic_power)


def _aic(resid: np.ndarray, k: int) -> float:
    n = resid.size
    rss = max(float(resid @ resid), 1e-300)
    return n * math.log(rss / n) + 2 * k


def exterior_gradient_rate(u: GridFunction, d: Domain | None = None, p: FracParams | None = None,
                           side: str = "right", min_shells: int = 5, confidence: float = 0.95,
                           normalize: bool = True) -> RateFit:
    """Slope of ``log |grad u_1|`` vs ``log delta`` over the near shells.

    Shells are the grid's exterior distances in ``[delta_min, h]``; gradients
    are centered differences with step ``delta / 4`` along the outward ray.
    A constant ``u`` gives ``flat=True`` and a NaN slope.
    """
    if p is None:
        raise ValueError("exterior_gradient_rate needs FracParams")
    grid = u.grid
    _require_interval(grid)
    dom = grid.domain
    deltas = grid.shell_deltas[(grid.shell_deltas >= grid.delta_min) & (grid.shell_deltas <= grid.h * (1 + 1e-12))]
    if deltas.size < min_shells:
        raise ValueError(f"need at least {min_shells} shells to fit a rate, have {deltas.size}")
    values = u.values
    if normalize:
        from .operators import w2p_surrogate

        nrm = w2p_surrogate(u, 2.0)
        if nrm > 0:
            values = values / nrm
    base, sign = (dom.b, 1.0) if side == "right" else (dom.a, -1.0)
    step = deltas / 4.0
    xp = base + sign * (deltas + step)
    xm = base + sign * (deltas - step)
    E, _ = extension_matrix(np.concatenate([xp, xm]), grid, p)
    up, um = np.split(E @ values, 2)
    grads = np.abs(up - um) / (2.0 * step)
    scale = max(np.max(np.abs(values)), 1e-300)
    if np.all(grads <= 1e-12 * scale / grid.h):
        return RateFit(float("nan"), float("nan"), (float("nan"), float("nan")), deltas, grads, flat=True)

    X = np.log(deltas)
    Y = np.log(grads)
    res = stats.linregress(X, Y)
    tq = stats.t.ppf(0.5 + confidence / 2, deltas.size - 2)
    band = (res.slope - tq * res.stderr, res.slope + tq * res.stderr)
    bound = float(np.max(grads * deltas ** (1.0 - 2.0 * p.s)))

    # model comparison on the gradient itself: A * delta^beta vs A + B log(1/delta)
    try:
        (A, beta), _ = optimize.curve_fit(lambda t, A, b: A * t**b, deltas, grads,
                                          p0=(math.exp(res.intercept), res.slope), maxfev=20000)
        r_pow = grads - A * deltas**beta
    except RuntimeError:
        r_pow = grads - np.exp(res.intercept) * deltas**res.slope
    G = np.column_stack([np.ones_like(deltas), np.log(1.0 / deltas)])
    coef, *_ = np.linalg.lstsq(G, grads, rcond=None)
    r_log = grads - G @ coef
    return RateFit(
        slope=float(res.slope),
        stderr=float(res.stderr),
        band=(float(band[0]), float(band[1])),
        deltas=deltas,
        gradients=grads,
        bound_constant=bound,
        aic_power=_aic(r_pow, 2),
        aic_log=_aic(r_log, 2),
    )
