"""Assembly and solution of ``-u'' + gamma (-Delta)^s u~ + q u' + a u = f``
with ``u' = 0`` at both ends, directly or by continuation in gamma.

The continuation starts from the local problem at gamma = 0.  From an
achieved ``gamma0`` with solution ``v0`` it reaches ``gamma0 + eps`` by
writing ``u = v0 + phi`` and iterating

    L_{gamma0} phi_{k+1} = -eps M (v0 + phi_k),

where ``M`` is the discrete fractional Laplacian of the extension.  The
iteration is a contraction with ratio proportional to ``eps``.
"""
from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .extension import GridFunction
from .geometry import Domain, Grid
from .kernels import FracParams, QuadratureRule
from .operators import Discretization, discretization

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """A linear solve or the continuation failed numerically."""


class SingularSystemError(SolverError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


def _samples(grid: Grid, v, name: str) -> np.ndarray:
    n = grid.nodes.size
    arr = np.asarray(v(grid.nodes) if callable(v) else v, dtype=float)
    arr = np.broadcast_to(arr, (n,)).copy() if arr.ndim == 0 or arr.size == 1 else arr
    if arr.shape != (n,):
        raise ValueError(f"{name} must have one sample per node ({n}), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite samples")
    return arr


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Coefficient samples at the closure nodes of ``grid``.

    ``q``, ``a``, ``f`` may be given as arrays, scalars or callables of x.
    """

    grid: Grid
    q: np.ndarray
    a: np.ndarray
    f: np.ndarray
    params: FracParams
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("q", "a", "f"):
            object.__setattr__(self, name, _samples(self.grid, getattr(self, name), name))
        if np.any(self.a < 0.0):
            raise ValueError("reaction coefficient a must be nonnegative")
        if not np.max(self.a) > 0.0:
            raise ValueError("reaction coefficient a must not vanish identically")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    def with_gamma(self, gamma: float) -> "ProblemData":
        return ProblemData(self.grid, self.q, self.a, self.f, self.params, gamma)

    def with_source(self, f) -> "ProblemData":
        return ProblemData(self.grid, self.q, self.a, f, self.params, self.gamma)


@dataclass(eq=False)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray
    gamma: float
    grid: Grid
    _lu: tuple | None = field(default=None, repr=False)

    def factor(self):
        if self._lu is None:
            self._lu = _factor(self.A)
        return self._lu


def _check_rows(A: np.ndarray):
    bad = np.flatnonzero(~np.all(np.isfinite(A), axis=1))
    if bad.size:
        raise SingularSystemError(f"row {bad[0]} has non-finite entries", int(bad[0]))
    zero = np.flatnonzero(~np.any(A != 0.0, axis=1))
    if zero.size:
        raise SingularSystemError(f"row {zero[0]} is identically zero", int(zero[0]))


def assemble(d: Domain | None, g: Grid, pd: ProblemData, disc: Discretization | None = None,
             q: QuadratureRule | None = None) -> LinearSystem:
    """Dense ``A_gamma`` and ``b`` on the closure nodes.

    Interior rows carry the operator; the first and last rows are the
    second-order one-sided difference for ``u' = 0``.
    """
    if d is not None and d != g.domain:
        raise ValueError("domain does not match the grid")
    if pd.grid is not g:
        raise ValueError("ProblemData was sampled on a different grid")
    disc = disc or discretization(g, pd.params, q)
    n, h = g.nodes.size, g.h
    A = disc.laplacian_matrix + pd.q[:, None] * disc.gradient_matrix
    if pd.gamma != 0.0:
        A = A + pd.gamma * disc.frac_matrix
    A[np.arange(1, n - 1), np.arange(1, n - 1)] += pd.a[1:-1]
    A[0, :3] = np.array([3.0, -4.0, 1.0]) / (2.0 * h)
    A[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2.0 * h)
    b = pd.f.copy()
    b[[0, -1]] = 0.0
    _check_rows(A)
    return LinearSystem(A, b, pd.gamma, g)


def _factor(A: np.ndarray, rcond_min: float = 1e-14):
    with warnings.catch_warnings():
        # exact singularity is reported below with the row attached
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    if not np.all(diag > 0.0):
        row = int(np.argmin(diag))
        raise SingularSystemError(f"exactly singular pivot at row {row}", row)
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < rcond_min:
        row = int(np.argmin(diag))
        raise SingularSystemError(f"matrix is numerically singular (rcond={rcond:.2e}); smallest pivot in row {row}", row)
    return lu, piv


def _residual(A: np.ndarray, u: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``b - A u`` accumulated in extended precision."""
    Al = A.astype(np.longdouble)
    return (b.astype(np.longdouble) - Al @ u.astype(np.longdouble)).astype(float)


def solve_fixed_gamma(system: LinearSystem, rtol: float = 1e-10, refine_steps: int = 3) -> GridFunction:
    """Dense LU solve with iterative refinement.

    Raises if the residual misses ``rtol * ||b||_inf``.
    """
    lu = system.factor()
    A, b = system.A, system.b
    u = linalg.lu_solve(lu, b, check_finite=False)
    bn = float(np.max(np.abs(b)))
    target = rtol * bn
    r = _residual(A, u, b)
    for _ in range(refine_steps):
        if np.max(np.abs(r)) <= target:
            break
        u = u + linalg.lu_solve(lu, r, check_finite=False)
        r = _residual(A, u, b)
    res = float(np.max(np.abs(r)))
    if res > target and res > 0.0:
        raise SolverError(f"residual {res:.3e} exceeds {rtol:.1e} * ||b|| = {target:.3e}")
    return GridFunction(system.grid, u)


def solve(pd: ProblemData, q: QuadratureRule | None = None) -> GridFunction:
    """Direct solve at ``pd.gamma``."""
    return solve_fixed_gamma(assemble(None, pd.grid, pd, q=q))


def fixed_point_step(phi: GridFunction, v0: GridFunction, gamma0: float, eps: float, pd: ProblemData,
                     system: LinearSystem | None = None, q: QuadratureRule | None = None) -> GridFunction:
    """One application of the contraction map: solve ``L_{gamma0} psi = -eps M (v0 + phi)``."""
    if system is None:
        system = assemble(None, pd.grid, pd.with_gamma(gamma0), q=q)
    elif system.gamma != gamma0:
        raise ValueError("system was assembled for another gamma")
    M = discretization(pd.grid, pd.params, q).frac_matrix
    rhs = -eps * (M @ (v0.values + phi.values))
    psi = linalg.lu_solve(system.factor(), rhs, check_finite=False)
    return GridFunction(pd.grid, psi)


def contraction_ratio(phi1: GridFunction, phi2: GridFunction, v0: GridFunction, gamma0: float, eps: float,
                      pd: ProblemData, system: LinearSystem | None = None) -> float:
    """``||J(phi2) - J(phi1)||_inf / ||phi2 - phi1||_inf``."""
    j1 = fixed_point_step(phi1, v0, gamma0, eps, pd, system)
    j2 = fixed_point_step(phi2, v0, gamma0, eps, pd, system)
    return float(np.max(np.abs(j2.values - j1.values)) / np.max(np.abs(phi2.values - phi1.values)))


@dataclass(frozen=True)
class EpsPolicy:
    """Step control for the continuation."""

    eps0: float = 0.1
    eps_max: float = 0.1
    eps_min: float = 1e-6
    tol: float = 1e-11
    max_iter: int = 200
    grow_after: int = 2


@dataclass(frozen=True)
class TraceRecord:
    gamma: float
    eps: float
    iters: int
    residual: float
    rho: float
    sup_norm: float


TRACE_COLUMNS = ("gamma", "eps", "iters", "residual", "rho", "sup_norm")


@dataclass
class ContinuationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    direct_mismatch: float = float("nan")
    flagged: bool = False
    rejected: int = 0

    @property
    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.records])

    def to_csv(self, header: dict | None = None) -> str:
        """CSV text; ``header`` items become leading ``# key: value`` lines."""
        buf = io.StringIO()
        for k, v in (header or {}).items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([repr(float(r.gamma)), repr(float(r.eps)), r.iters, f"{r.residual:.6e}",
                        f"{r.rho:.6e}", repr(float(r.sup_norm))])
        return buf.getvalue()


class ContinuationError(SolverError):
    def __init__(self, message: str, trace: ContinuationTrace):
        super().__init__(message)
        self.trace = trace


def _iterate(v0, gamma0, eps, pd, system, M, policy):
    lu = system.factor()
    base = M @ v0
    tol = policy.tol * max(1.0, float(np.max(np.abs(v0))))
    phi = np.zeros_like(v0)
    prev_step = None
    rho = 0.0
    for k in range(1, policy.max_iter + 1):
        new = linalg.lu_solve(lu, -eps * (base + M @ phi), check_finite=False)
        step = float(np.max(np.abs(new - phi)))
        phi = new
        if not np.all(np.isfinite(phi)):
            return None, k, float("inf")
        if prev_step is not None and prev_step > 0.0:
            rho = step / prev_step
            if rho >= 1.0 and k > 2:
                return None, k, rho
        if step <= tol:
            return phi, k, rho
        prev_step = step
    return None, policy.max_iter, rho


def continuation_solve(pd: ProblemData, gamma_target: float = 1.0, policy: EpsPolicy | None = None,
                       q: QuadratureRule | None = None, check_tol: float = 1e-8) -> tuple[GridFunction, ContinuationTrace]:
    """Advance from gamma = 0 to ``gamma_target`` through the contraction map.

    The result is re-solved directly at ``gamma_target``; a sup-norm gap
    above ``check_tol`` sets ``trace.flagged``.
    """
    policy = policy or EpsPolicy()
    grid = pd.grid
    M = discretization(grid, pd.params, q).frac_matrix
    trace = ContinuationTrace()

    def record(gamma, eps, iters, rho, u):
        sysg = assemble(None, grid, pd.with_gamma(gamma), q=q)
        res = float(np.max(np.abs(sysg.A @ u - sysg.b)))
        trace.records.append(TraceRecord(gamma, eps, iters, res, rho, float(np.max(np.abs(u)))))
        return sysg

    system = assemble(None, grid, pd.with_gamma(0.0), q=q)
    v0 = solve_fixed_gamma(system).values
    record(0.0, 0.0, 1, 0.0, v0)
    gamma, eps, streak = 0.0, policy.eps0, 0
    while gamma < gamma_target:
        step = min(eps, gamma_target - gamma)
        if gamma_target - gamma - step <= 1e-12:
            step = gamma_target - gamma
        phi, iters, rho = _iterate(v0, gamma, step, pd, system, M, policy)
        if phi is None:
            trace.rejected += 1
            eps = step / 2.0
            streak = 0
            log.info("fixed point diverged at gamma=%.6g eps=%.3g (rho=%.3g); halving", gamma, step, rho)
            if eps < policy.eps_min:
                raise ContinuationError(f"eps underflow below {policy.eps_min:g} at gamma={gamma:.6g}", trace)
            continue
        gamma = gamma_target if step == gamma_target - gamma else gamma + step
        v0 = v0 + phi
        system = record(gamma, step, iters, rho, v0)
        streak = streak + 1 if iters == 1 else 0
        eps = step
        if streak >= policy.grow_after:
            eps, streak = min(2.0 * step, policy.eps_max), 0

    u = GridFunction(grid, v0)
    direct = solve_fixed_gamma(assemble(None, grid, pd.with_gamma(gamma_target), q=q))
    trace.direct_mismatch = float(np.max(np.abs(direct.values - v0)))
    if trace.direct_mismatch > check_tol:
        trace.flagged = True
        log.warning("continuation differs from the direct solve by %.3e", trace.direct_mismatch)
    return u, trace
