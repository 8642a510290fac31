"""Numerical checks of the bilinear-form identities, seminorm diagnostics,
the maximum-principle campaign and brute-force oracles.

Double integrals over ``Q = R x R minus (complement x complement)`` are
split as ``Omega x Omega`` plus twice ``Omega x exterior``.  For piecewise
linear functions the ``Omega x Omega`` part is assembled exactly from
translation-invariant cell-pair blocks; the ``Omega x exterior`` part uses
exact cell moments on the exterior quadrature.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from scipy import special
from scipy.integrate import quad

from ._accel import _power_integral_np, cell_moments, hat_weights_from_moments, scatter_pairs
from .extension import GridFunction, extension_matrix
from .geometry import Domain, Grid, build_grid
from .kernels import FracParams, QuadratureRule, exterior_quadrature, regional_kernel_matrix
from .operators import discretization

# ---------------------------------------------------------------- forms


def _gauss01(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _adjacent_moments(alpha: float, m: int = 40) -> dict[tuple[int, int], float]:
    """``int_{[0,1]^2} xi^p eta^q (xi + eta)^(-alpha)`` for p + q = 2."""
    out = {}
    rho, wr = _gauss01(m)
    rho = 1.0 + rho
    for p, q in ((2, 0), (1, 1), (0, 2)):
        inner_full = special.beta(p + 1, q + 1)
        # for rho in (1, 2) theta runs over (1 - 1/rho, 1/rho)
        lo, hi = 1.0 - 1.0 / rho, 1.0 / rho
        inner = special.betainc(p + 1, q + 1, hi) - special.betainc(p + 1, q + 1, lo)
        outer = np.sum(wr * rho ** (3.0 - alpha) * inner * inner_full)
        out[(p, q)] = inner_full / (4.0 - alpha) + float(outer)
    return out


def omega_stiffness(grid: Grid, p: FracParams, gauss_points: int = 16) -> np.ndarray:
    """``S`` with ``u @ S @ v = int int_{Omega^2} (u(x)-u(y))(v(x)-v(y)) |x-y|^(-1-2s)``
    for piecewise-linear ``u, v``."""
    alpha, h, ncell = p.alpha, grid.h, grid.n_cells
    local = np.zeros((ncell, 4, 4))
    i0 = 2.0 / ((3.0 - alpha) * (4.0 - alpha))
    local[0, :2, :2] = i0 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    if ncell > 1:
        M = _adjacent_moments(alpha)
        # nodes c, c+1, c+2 carry xi, eta - xi, -eta with xi = 1 - lam, eta = mu
        a = np.array([1.0, -1.0, 0.0])
        b = np.array([0.0, 1.0, -1.0])
        blk = (np.outer(a, a) * M[(2, 0)] + (np.outer(a, b) + np.outer(b, a)) * M[(1, 1)]
               + np.outer(b, b) * M[(0, 2)])
        slots = [0, 1, 3]
        local[1][np.ix_(slots, slots)] = 2.0 * blk
    if ncell > 2:
        gx, gw = _gauss01(gauss_points)
        lam, mu = np.meshgrid(gx, gx, indexing="ij")
        w = np.outer(gw, gw)
        g = np.stack([1.0 - lam, lam, -(1.0 - mu), -mu])
        k = np.arange(2, ncell)[:, None, None]
        K = (k + mu[None] - lam[None]) ** (-alpha) * w[None]
        local[2:] = 2.0 * np.einsum("pab,qab,kab->kpq", g, g, K)
    return scatter_pairs(grid.nodes.size, local * h ** (2.0 - alpha))


class FormAssembly:
    """Cached pieces of the double integrals for one (grid, s, quadrature)."""

    def __init__(self, grid: Grid, p: FracParams, q: QuadratureRule | None = None, regional_points: int = 2,
                 graded_levels: int = 24):
        if grid.domain.kind != "interval":
            raise NotImplementedError("forms are implemented for intervals")
        self.grid, self.p, self.q = grid, p, q or QuadratureRule()
        self.h = grid.h
        self.regional_points = regional_points
        self.graded_levels = graded_levels

    @cached_property
    def ext(self):
        return exterior_quadrature(self.grid.domain, self.p.s, self.grid.R_trunc, self.q)

    @cached_property
    def moments(self) -> np.ndarray:
        g = self.grid
        return cell_moments(self.ext.points, g.domain.a, g.h, g.n_cells, self.p.alpha)

    @cached_property
    def hat(self) -> np.ndarray:
        return hat_weights_from_moments(self.moments)

    @cached_property
    def F(self) -> np.ndarray:
        return self.hat.sum(axis=1)

    @cached_property
    def S(self) -> np.ndarray:
        return omega_stiffness(self.grid, self.p)

    @cached_property
    def cell_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Gauss points/weights, ``regional_points`` per cell."""
        gx, gw = _gauss01(self.regional_points)
        n = self.grid.nodes
        return (n[:-1, None] + self.h * gx).ravel(), np.tile(self.h * gw, n.size - 1)

    @cached_property
    def k_cells(self) -> np.ndarray:
        x, _ = self.cell_rule
        return regional_kernel_matrix(x, x, self.grid.domain, self.p, self.ext)

    def extension(self, u: np.ndarray) -> np.ndarray:
        return self.hat @ u / self.F

    def P(self, u: np.ndarray) -> np.ndarray:
        return self.hat @ u

    def P2(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``int_Omega u v |y - x|^(-1-2s)`` at the exterior nodes."""
        m = self.moments
        du, dv = np.diff(u), np.diff(v)
        c0 = u[:-1] * v[:-1]
        c1 = u[:-1] * dv + v[:-1] * du
        c2 = du * dv
        return m[..., 0] @ c0 + m[..., 1] @ c1 + m[..., 2] @ c2

    def omega_form(self, u, v) -> float:
        return float(u @ self.S @ v)

    def regional_form(self, u, v) -> float:
        """Product-Gauss ``int int_{Omega^2} (u(x)-u(y))(v(x)-v(y)) k_Omega``."""
        x, w = self.cell_rule
        nodes = self.grid.nodes
        ux, vx = np.interp(x, nodes, u), np.interp(x, nodes, v)
        du = ux[:, None] - ux[None, :]
        dv = vx[:, None] - vx[None, :]
        return float(w @ (du * dv * self.k_cells) @ w)

    def exterior_form(self, u, v, v_ext=None) -> float:
        """``2 int_ext int_Omega (u~(x)-u(y))(v(x)-v(y)) |x-y|^(-1-2s)``.

        ``v_ext`` gives v at the exterior nodes; default is the extension of v.
        """
        u, v = np.asarray(u, float), np.asarray(v, float)
        ut = self.extension(u)
        vt = self.extension(v) if v_ext is None else np.asarray(v_ext, float)
        # shift by the exterior value first; expanding the product cancels
        # terms of size F, which blows up next to the boundary
        m = self.moments
        du, dv = np.diff(u), np.diff(v)
        a = u[None, :-1] - ut[:, None]
        b = v[None, :-1] - vt[:, None]
        integrand = (np.sum(m[..., 0] * a * b, axis=1) + np.sum(m[..., 1] * (a * dv + b * du), axis=1)
                     + m[..., 2] @ (du * dv))
        return float(2.0 * np.sum(self.ext.weights * integrand))

    def q_form(self, u, v, v_ext=None) -> float:
        return self.omega_form(u, v) + self.exterior_form(u, v, v_ext)

    @cached_property
    def graded_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Points/weights on Omega, each cell graded geometrically toward both nodes."""
        gx, gw = _gauss01(6)
        edges = 0.5 ** np.arange(self.graded_levels, 0, -1)
        lo, wd = edges[:-1], np.diff(edges)
        lam = (lo[:, None] + wd[:, None] * gx).ravel()
        wl = (wd[:, None] * gw).ravel()
        lam = np.concatenate([lam, 1.0 - lam[::-1]])
        wl = np.concatenate([wl, wl[::-1]])
        nodes = self.grid.nodes[:-1]
        return (nodes[:, None] + self.h * lam).ravel(), np.tile(self.h * wl, nodes.size)

    @cached_property
    def pointwise_frac(self) -> np.ndarray:
        """Exact ``(-Delta)^s`` of the piecewise-linear extension at ``graded_rule`` points,
        as a matrix acting on nodal values (up to the exterior quadrature)."""
        g, p = self.grid, self.p
        x, _ = self.graded_rule
        alpha, h, n = p.alpha, self.h, g.nodes.size
        c = np.minimum(((x - g.domain.a) / h).astype(int), g.n_cells - 1)
        lam = (x - g.nodes[c]) / h
        interp = np.zeros((x.size, n))
        rows = np.arange(x.size)
        interp[rows, c] = 1.0 - lam
        interp[rows, c + 1] = lam
        mom = cell_moments(x, g.domain.a, h, g.n_cells, alpha)
        W = hat_weights_from_moments(mom)
        T = interp * W.sum(axis=1)[:, None] - W
        # the cell holding x: u is linear there, the principal value is explicit
        rL, rR = lam * h, (1.0 - lam) * h
        pv = _power_integral_np(rL, rR - rL, 2.0 - alpha) / h
        T[rows, c] += pv
        T[rows, c + 1] -= pv
        ext, E = self.ext, self.hat / self.F[:, None]
        for lo in range(0, x.size, 512):
            sl = slice(lo, lo + 512)
            Kq = np.abs(x[sl, None] - ext.points[None, :]) ** (-alpha) * ext.weights
            T[sl] += interp[sl] * Kq.sum(axis=1)[:, None] - Kq @ E
        return p.C_Ns * T

    def neumann(self, u) -> np.ndarray:
        """``N_s u~`` at the exterior nodes (zero up to rounding)."""
        return self.p.C_Ns * (self.extension(u) * self.F - self.P(u))


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class IdentityReport:
    """Both sides of an identity and their discrepancy.

    ``rel_error`` is ``abs_error / scale``; ``scale`` is the Cauchy-Schwarz
    size ``sqrt(Q(u,u) Q(v,v))`` of the bilinear form (times the same
    constant as the two sides), so that near-orthogonal pairs do not blow
    up the relative error.
    """

    name: str
    left: float
    right: float
    abs_error: float
    rel_error: float
    scale: float
    h: float
    R_trunc: float
    panel_points: int
    s: float

    def row(self) -> dict:
        return asdict(self)


REPORT_COLUMNS = tuple(IdentityReport.__dataclass_fields__)


def _report(name, left, right, scale, fa: FormAssembly) -> IdentityReport:
    err = abs(left - right)
    rel = err / scale if scale > 0 else (0.0 if err == 0 else math.inf)
    return IdentityReport(name, float(left), float(right), float(err), float(rel), float(scale),
                          fa.h, fa.grid.R_trunc, fa.q.panel_points, fa.p.s)


def _fa(grid, p, q):
    return FormAssembly(grid, p, q)


def _vals(u):
    return u.values if isinstance(u, GridFunction) else np.asarray(u, float)


def bilinear_equivalence(u, v, p: FracParams, q: QuadratureRule | None = None,
                         fa: FormAssembly | None = None) -> IdentityReport:
    """Regional-kernel form on ``Omega x Omega`` against ``C_{N,s}`` times the form over Q.

    The left side's ``k_Omega`` part uses the midpoint rule on cell
    midpoints, the right side exact cell moments; ``v`` outside is its
    extension, so its nonlocal normal derivative vanishes.
    """
    fa = fa or _fa(u.grid, p, q)
    uu, vv = _vals(u), _vals(v)
    C = p.C_Ns
    left = C * (fa.omega_form(uu, vv) + fa.regional_form(uu, vv))
    right = C * fa.q_form(uu, vv)
    scale = C * math.sqrt(max(fa.q_form(uu, uu), 0.0) * max(fa.q_form(vv, vv), 0.0))
    return _report("bilinear_equivalence", left, right, scale, fa)


def integration_by_parts(u, v, p: FracParams, q: QuadratureRule | None = None, v_ext=None,
                         fa: FormAssembly | None = None) -> IdentityReport:
    """``(C/2) Q(u~, v)`` against ``int_Omega v (-Delta)^s u~ + int_ext v N_s u~``.

    ``v_ext`` are the values of v at the exterior quadrature nodes (default:
    the extension of v).  The domain integral uses the exact pointwise
    fractional Laplacian of the piecewise-linear extension on a rule graded
    toward every node, where it is singular for s > 1/2.
    """
    fa = fa or _fa(u.grid, p, q)
    uu, vv = _vals(u), _vals(v)
    vt = fa.extension(vv) if v_ext is None else np.asarray(v_ext, float)
    C = p.C_Ns
    left = 0.5 * C * fa.q_form(uu, vv, vt)
    x, w = fa.graded_rule
    domain_term = float(w @ (np.interp(x, fa.grid.nodes, vv) * (fa.pointwise_frac @ uu)))
    neumann_term = float(np.sum(fa.ext.weights * vt * fa.neumann(uu)))
    right = domain_term + neumann_term
    qv = fa.omega_form(vv, vv) + 2.0 * float(np.sum(fa.ext.weights * (fa.P2(vv, vv) - 2 * vt * fa.P(vv) + vt**2 * fa.F)))
    scale = 0.5 * C * math.sqrt(max(fa.q_form(uu, uu), 0.0) * max(qv, 0.0))
    return _report("integration_by_parts", left, right, scale, fa)


@dataclass(frozen=True)
class Seminorms:
    gagliardo: float
    regional: float
    l1s: float


def seminorms(u, p: FracParams, q: QuadratureRule | None = None, fa: FormAssembly | None = None) -> Seminorms:
    """``[u]_s``, ``[u]_{s,K}`` and the weighted L1 norm of the extension.

    Both seminorms include ``int_Omega |u'|^2``; neither carries ``C_{N,s}``.
    """
    fa = fa or _fa(u.grid, p, q)
    uu = _vals(u)
    grad2 = float(np.sum(np.diff(uu) ** 2) / fa.h)
    gag = grad2 + fa.q_form(uu, uu)
    reg = grad2 + fa.omega_form(uu, uu) + fa.regional_form(uu, uu)
    # interior part: Gauss on each cell of the piecewise-linear u
    gx, gw = _gauss01(8)
    nodes = fa.grid.nodes
    y = (nodes[:-1, None] + fa.h * gx).ravel()
    uy = np.interp(y, nodes, uu)
    wy = np.tile(gw * fa.h, nodes.size - 1)
    inner = float(np.sum(wy * np.abs(uy) / (1.0 + np.abs(y) ** p.alpha)))
    ut = fa.extension(uu)
    outer = float(np.sum(fa.ext.weights * np.abs(ut) / (1.0 + np.abs(fa.ext.points) ** p.alpha)))
    return Seminorms(math.sqrt(max(gag, 0.0)), math.sqrt(max(reg, 0.0)), inner + outer)


def study_rule(level: int) -> QuadratureRule:
    """Quadrature used at refinement level ``level`` of an identity study."""
    return QuadratureRule(panel_points=10 + 4 * level, tail_points=24 + 8 * level,
                          floor_rel=1e-11 * 10.0**-level)


IDENTITIES = {"bilinear_equivalence": bilinear_equivalence, "integration_by_parts": integration_by_parts}


def refinement_study(pairs, s: float, domain: Domain | None = None, h0: float = 1 / 32, levels: int = 3,
                     kinds=tuple(IDENTITIES)) -> dict[str, list[list[IdentityReport]]]:
    """Identity reports for each ``(u_func, v_func)`` pair on ``h0, h0/2, ...``.

    Quadrature and the node grading of the domain rule are refined along
    with the grid.  Returns ``{kind: [[report per level] per pair]}``.
    """
    domain = domain or Domain.interval(0.0, 1.0)
    p = FracParams(s)
    out = {k: [[] for _ in pairs] for k in kinds}
    for lev in range(levels):
        g = build_grid(domain, h0 / 2**lev)
        fa = FormAssembly(g, p, study_rule(lev), graded_levels=24 + 8 * lev)
        for j, (uf, vf) in enumerate(pairs):
            u = GridFunction.from_callable(g, uf)
            v = GridFunction.from_callable(g, vf)
            for k in kinds:
                out[k][j].append(IDENTITIES[k](u, v, p, fa=fa))
    return out


# ---------------------------------------------------------------- max principle


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: str
    s: float
    min_u: float
    min_ext: float
    violation: bool


@dataclass
class CampaignSummary:
    records: list[TrialRecord]
    tol: float

    @property
    def violations(self) -> list[TrialRecord]:
        return [r for r in self.records if r.violation]

    @property
    def passed(self) -> bool:
        return not self.violations


def default_sampler(rng: np.random.Generator, domain: Domain):
    from .presets import random_coefficients

    return random_coefficients(rng, domain.a, domain.b, a_min=0.1)


def max_principle_campaign(trials: int, seed: int, pd_sampler=None, s_values=(0.3, 0.5, 0.7),
                           domain: Domain | None = None, h: float = 1 / 64, tol: float = 1e-8,
                           q: QuadratureRule | None = None) -> CampaignSummary:
    """Solve at gamma = 1 for sampled ``(q, a, f >= 0)`` and check minima.

    A trial is a violation if ``min u < -tol`` or the minimum of the
    extension over the grid's exterior nodes falls below ``min u - tol``.
    """
    from .solver import ProblemData, solve

    domain = domain or Domain.interval(0.0, 1.0)
    sampler = pd_sampler or default_sampler
    grid = build_grid(domain, h)
    records = []
    for t in range(trials):
        s = s_values[t % len(s_values)]
        p = FracParams(s)
        rng = np.random.default_rng([seed, t])
        qf, af, ff = sampler(rng, domain)
        u = solve(ProblemData(grid, qf, af, ff, p, 1.0), q)
        E, _ = extension_matrix(grid.exterior, grid, p)
        ext = E @ u.values
        mu, me = float(u.values.min()), float(ext.min())
        bad = mu < -tol or me < mu - tol
        records.append(TrialRecord(t, f"{seed}:{t}", s, mu, me, bad))
    return CampaignSummary(records, tol)


# ---------------------------------------------------------------- oracles


def _geometric_panels(lo: float, hi: float, levels: int, toward_lo: bool = True):
    """Panel edges on ``[lo, hi]`` halving toward one end (innermost sliver dropped)."""
    L = hi - lo
    fr = 0.5 ** np.arange(levels + 1)
    return lo + L * fr[::-1] if toward_lo else hi - L * fr


def _panel_rule(edges, m):
    gx, gw = _gauss01(m)
    lo, w = edges[:-1], np.diff(edges)
    return (lo[:, None] + w[:, None] * gx).ravel(), (w[:, None] * gw).ravel()


def brute_force_frac_laplacian(values, grid: Grid, p: FracParams, i: int, resolution: int = 64,
                               levels: int = 200) -> float:
    """Dense composite quadrature of ``(-Delta)^s`` of the same representation
    the operator uses: local quadratic on ``[x_{i-1}, x_{i+1}]``, piecewise
    linear elsewhere in the domain, weighted-average extension outside.

    Written as ``C int_0^inf (2u(x) - u(x+z) - u(x-z)) z^(-1-2s) dz``
    split per side, with ``resolution`` sub-panels per cell, geometric
    panels toward every boundary crossing and a ``t = 1/z`` tail.
    """
    u = np.asarray(values, float)
    nodes, h, d = grid.nodes, grid.h, grid.domain
    x = nodes[i]
    alpha, C = p.alpha, p.C_Ns
    d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h**2

    # |z| <= h: 2Q(x) - Q(x+z) - Q(x-z) = -Q'' z^2
    z, w = _panel_rule(_geometric_panels(0.0, h, levels), 8)
    total = float(np.sum(w * (-d2) * z ** (2.0 - alpha)))

    def ext_vals(y):
        E, _ = extension_matrix(y, grid, p)
        return E @ u

    for sign in (1.0, -1.0):
        D = (d.b - x) if sign > 0 else (x - d.a)
        # inside the domain, h <= z <= D
        if D > h * (1 + 1e-12):
            ncells = int(round((D - h) / h))
            edges = h + h * np.arange(ncells * resolution + 1) / resolution
            z, w = _panel_rule(edges, 4)
            total += float(np.sum(w * (u[i] - np.interp(x + sign * z, nodes, u)) * z ** (-alpha)))
        # outside: graded toward the boundary crossing, then geometric growth
        L = d.length
        e1 = _geometric_panels(D, D + L, 40)
        e2 = D + L * 2.0 ** np.arange(0, 30)
        z, w = _panel_rule(np.concatenate([e1, e2[1:]]), 8)
        total += float(np.sum(w * (u[i] - ext_vals(x + sign * z)) * z ** (-alpha)))
        Z = D + L * 2.0**29
        # z > Z via t = 1/z on (0, 1/Z], graded toward t = 0
        t, wt = _panel_rule(_geometric_panels(0.0, 1.0 / Z, 80), 8)
        zz = 1.0 / t
        total += float(np.sum(wt * (u[i] - ext_vals(x + sign * zz)) * t ** (alpha - 2.0)))
    return C * total


def brute_force_regional_kernel(x: float, y: float, d: Domain, p: FracParams) -> float:
    """``K_Omega`` by nested adaptive quadrature; ``F`` is itself integrated.

    Both integrals run in logarithmic variables (``r = delta e^t`` inside,
    ``delta = e^tau`` outside), where the integrands are smooth.
    """
    alpha, L = p.alpha, d.length

    def F(delta):
        f = lambda t: (delta * math.exp(t)) ** (1.0 - alpha)
        return quad(f, 0.0, math.log1p(L / delta), epsabs=0.0, epsrel=1e-13, limit=200)[0]

    def g(tau, side):
        delta = math.exp(tau)
        z = d.b + delta if side > 0 else d.a - delta
        return abs(x - z) ** (-alpha) * abs(y - z) ** (-alpha) / F(delta) * delta

    k = 0.0
    for side in (1, -1):
        k += quad(g, -60.0, math.log(100.0 * L), args=(side,), epsabs=0.0, epsrel=1e-12, limit=400)[0]
        far = lambda delta: g(math.log(delta), side) / delta
        k += quad(far, 100.0 * L, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return abs(x - y) ** (-alpha) + k


# ---------------------------------------------------------------- rates and surrogate


@dataclass(frozen=True)
class RateRow:
    s: float
    quantity: str
    slope: float
    band_lo: float
    band_hi: float
    target: float
    aic_power: float
    aic_log: float
    log_preferred: bool


RATE_COLUMNS = tuple(RateRow.__dataclass_fields__)


def boundary_factor_rate(grid: Grid, p: FracParams, confidence: float = 0.95):
    """Least-squares slope of ``log F`` against ``log delta`` over the near shells."""
    from scipy import stats

    from .kernels import boundary_factor

    deltas = grid.shell_deltas[(grid.shell_deltas >= grid.delta_min) & (grid.shell_deltas <= grid.h * (1 + 1e-12))]
    F = boundary_factor(grid.domain.b + deltas, grid.domain, p)
    res = stats.linregress(np.log(deltas), np.log(F))
    tq = stats.t.ppf(0.5 + confidence / 2, deltas.size - 2)
    return float(res.slope), (float(res.slope - tq * res.stderr), float(res.slope + tq * res.stderr))


def rates_campaign(s_values=(0.25, 0.5, 0.75), domain: Domain | None = None, h: float = 0.01,
                   u_func=None) -> list[RateRow]:
    """Gradient and boundary-factor exponents near the right endpoint."""
    from .extension import exterior_gradient_rate

    domain = domain or Domain.interval(0.0, 1.0)
    u_func = u_func or (lambda x: np.exp(x))
    grid = build_grid(domain, h)
    u = GridFunction.from_callable(grid, u_func)
    rows = []
    for s in s_values:
        p = FracParams(s)
        fit = exterior_gradient_rate(u, domain, p)
        rows.append(RateRow(s, "gradient", fit.slope, fit.band[0], fit.band[1], min(0.0, 2 * s - 1),
                            fit.aic_power, fit.aic_log, fit.log_model_preferred))
        slope, band = boundary_factor_rate(grid, p)
        rows.append(RateRow(s, "boundary_factor", slope, band[0], band[1], -2 * s,
                            float("nan"), float("nan"), False))
    return rows


@dataclass(frozen=True)
class SurrogateRow:
    s: float
    p: float
    h: float
    w2p: float
    f_norm: float
    ratio: float


SURROGATE_COLUMNS = tuple(SurrogateRow.__dataclass_fields__)


def admissible_exponent(s: float, p: float, N: int = 1) -> bool:
    """Whether ``(s, p)`` lies in the solvability ranges: ``p > N`` and, for
    ``s < 1/2``, also ``p < 1 / (1 - 2s)``."""
    if p <= N:
        return False
    return s >= 0.5 or p < 1.0 / (1.0 - 2.0 * s)


def surrogate_study(s: float, p_exp: float, pd_factory, domain: Domain | None = None, h0: float = 1 / 50,
                    levels: int = 3) -> list[SurrogateRow]:
    """``W^{2,p}`` surrogate of the gamma = 1 solution over ``||f||_p`` on ``h0 / 2^k``.

    ``pd_factory(grid, params)`` builds the :class:`~nlneumann.solver.ProblemData`.
    """
    from .operators import lp_norm, w2p_surrogate
    from .solver import solve

    domain = domain or Domain.interval(0.0, 1.0)
    params = FracParams(s)
    rows = []
    for lev in range(levels):
        g = build_grid(domain, h0 / 2**lev)
        pd = pd_factory(g, params)
        u = solve(pd)
        w = w2p_surrogate(u, p_exp)
        fn = lp_norm(pd.f, g, p_exp)
        rows.append(SurrogateRow(s, p_exp, g.h, w, fn, w / fn))
    return rows


def neumann_residual(func, grid: Grid, p: FracParams, check_points=None) -> float:
    """Max ``|N_s u~|`` over exterior check points, where ``u~`` extends the grid
    samples of ``func`` but the domain integral uses ``func`` itself."""
    from .extension import extend, neumann_derivative

    d = grid.domain
    if check_points is None:
        off = np.array([0.05, 0.1, 0.25, 0.5]) * d.length
        check_points = np.concatenate([d.a - off, d.b + off])
    u = extend(GridFunction.from_callable(grid, func), p=p)
    return max(abs(neumann_derivative(u, float(x), p, interior=func)) for x in check_points)
