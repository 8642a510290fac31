"""Hot loops with a numba path and a pure-numpy path.

Set ``NLNEUMANN_NUMBA=0`` in the environment to force the numpy path (also
used automatically when numba is not importable).  Both paths compute the
same quantities; ``tests/test_accel.py`` checks them against each other.
"""
from __future__ import annotations

import os

import numpy as np

# the portable thread pool; an old system TBB otherwise triggers warnings
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _flag_enabled() -> bool:
    return os.environ.get("NLNEUMANN_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _flag_enabled()


def njit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def set_threads(n: int) -> int:
    """Cap the numba thread pool; returns the count actually in effect."""
    if not HAVE_NUMBA:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


# 8-point Gauss-Legendre on [0, 1]; used where the kernel is smooth across a cell
_GX, _GW = np.polynomial.legendre.leggauss(8)
GAUSS_X = 0.5 * (_GX + 1.0)
GAUSS_W = 0.5 * _GW

# closed forms are used when cell width / near distance >= this
_CLOSED_FORM_RATIO = 0.5
# targets inside the grid closer than this (relative to h) to a cell are
# treated as on its edge; targets outside the grid are never snapped
_EDGE_TOL = 1e-9


@njit
def _power_integral(r, w, e):
    # int_r^{r+w} t^(e-1) dt, stable for small e and for w << r
    lg = np.log1p(w / r)
    if e == 0.0:
        return lg
    return r**e * np.expm1(e * lg) / e


@njit
def _cell_moments_numba(y, x0, h, ncell, alpha, gx, gw):
    nt = y.shape[0]
    out = np.empty((nt, ncell, 3))
    e0 = 1.0 - alpha
    xend = x0 + ncell * h
    for i in range(nt):
        yi = y[i]
        outside = yi < x0 or yi > xend
        for c in range(ncell):
            tl = x0 + c * h
            tr = tl + h
            if yi >= tr:
                r_lo = yi - tr
                flip = True
            elif yi <= tl:
                r_lo = tl - yi
                flip = False
            else:
                r_lo = 0.0
                flip = False
            if r_lo <= 0.0 or (r_lo <= _EDGE_TOL * h and not outside):
                out[i, c, 0] = np.nan
                out[i, c, 1] = np.nan
                out[i, c, 2] = np.nan
                continue
            if h / r_lo < _CLOSED_FORM_RATIO:
                k0 = 0.0
                k1 = 0.0
                k2 = 0.0
                for g in range(gx.shape[0]):
                    mu = gx[g]
                    val = gw[g] * h * (r_lo + h * mu) ** (-alpha)
                    k0 += val
                    k1 += val * mu
                    k2 += val * mu * mu
            else:
                i0 = _power_integral(r_lo, h, e0)
                i1 = _power_integral(r_lo, h, e0 + 1.0)
                i2 = _power_integral(r_lo, h, e0 + 2.0)
                k0 = i0
                k1 = (i1 - r_lo * i0) / h
                k2 = (i2 - 2.0 * r_lo * i1 + r_lo * r_lo * i0) / (h * h)
            if flip:
                out[i, c, 0] = k0
                out[i, c, 1] = k0 - k1
                out[i, c, 2] = k0 - 2.0 * k1 + k2
            else:
                out[i, c, 0] = k0
                out[i, c, 1] = k1
                out[i, c, 2] = k2
    return out


def _power_integral_np(r, w, e):
    lg = np.log1p(w / r)
    if e == 0.0:
        return lg
    return r**e * np.expm1(e * lg) / e


def _cell_moments_numpy(y, x0, h, ncell, alpha, gx, gw):
    y = np.asarray(y, dtype=float)[:, None]
    tl = x0 + h * np.arange(ncell)[None, :]
    tr = tl + h
    right = y >= tr
    left = y <= tl
    r_lo = np.where(right, y - tr, np.where(left, tl - y, 0.0))
    outside = (y < x0) | (y > x0 + ncell * h)
    valid = (r_lo > 0.0) & ((r_lo > _EDGE_TOL * h) | outside)
    r_safe = np.where(valid, r_lo, 1.0)
    e0 = 1.0 - alpha
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        i0 = _power_integral_np(r_safe, h, e0)
        i1 = _power_integral_np(r_safe, h, e0 + 1.0)
        i2 = _power_integral_np(r_safe, h, e0 + 2.0)
        c0 = i0
        c1 = (i1 - r_safe * i0) / h
        c2 = (i2 - 2.0 * r_safe * i1 + r_safe**2 * i0) / h**2
        vals = gw * h * (r_safe[..., None] + h * gx) ** (-alpha)
    g0 = vals.sum(-1)
    g1 = (vals * gx).sum(-1)
    g2 = (vals * gx**2).sum(-1)
    use_gauss = h / r_safe < _CLOSED_FORM_RATIO
    k0 = np.where(use_gauss, g0, c0)
    k1 = np.where(use_gauss, g1, c1)
    k2 = np.where(use_gauss, g2, c2)
    m0 = k0
    m1 = np.where(right, k0 - k1, k1)
    m2 = np.where(right, k0 - 2.0 * k1 + k2, k2)
    out = np.stack([m0, m1, m2], axis=-1)
    out[~valid] = np.nan
    return out


def cell_moments(y, x0: float, h: float, ncell: int, alpha: float, use_numba: bool | None = None) -> np.ndarray:
    """Moments ``int_cell lam^m |y - t|^(-alpha) dt`` for m = 0, 1, 2.

    Cells are ``[x0 + c h, x0 + (c+1) h]`` and ``lam = (t - t_c) / h`` is the
    local coordinate from the cell's left node.  Entries for a target lying
    in (or on the edge of) a cell are NaN.  Returns shape ``(len(y), ncell, 3)``.
    """
    y = np.ascontiguousarray(np.atleast_1d(np.asarray(y, dtype=float)))
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and HAVE_NUMBA:
        return _cell_moments_numba(y, float(x0), float(h), int(ncell), float(alpha), GAUSS_X, GAUSS_W)
    return _cell_moments_numpy(y, float(x0), float(h), int(ncell), float(alpha), GAUSS_X, GAUSS_W)


def hat_weights_from_moments(mom: np.ndarray) -> np.ndarray:
    """Fold cell moments into nodal hat-function weights, NaN cells dropped."""
    m0 = np.nan_to_num(mom[..., 0])
    m1 = np.nan_to_num(mom[..., 1])
    nt, ncell = m0.shape
    w = np.zeros((nt, ncell + 1))
    w[:, :-1] += m0 - m1
    w[:, 1:] += m1
    return w


@njit
def _scatter_pairs_numba(n_nodes, local):
    # local[k] is the 4x4 block for cell pair (c, c+k) on dofs (c, c+1, c+k, c+k+1)
    ncell = n_nodes - 1
    S = np.zeros((n_nodes, n_nodes))
    for k in range(local.shape[0]):
        for c in range(ncell - k):
            idx = (c, c + 1, c + k, c + k + 1)
            for p in range(4):
                for q in range(4):
                    S[idx[p], idx[q]] += local[k, p, q]
    return S


def _scatter_pairs_numpy(n_nodes, local):
    ncell = n_nodes - 1
    S = np.zeros((n_nodes, n_nodes))
    for k in range(local.shape[0]):
        c = np.arange(ncell - k)
        if c.size == 0:
            continue
        idx = np.stack([c, c + 1, c + k, c + k + 1], axis=1)
        rows = np.repeat(idx, 4, axis=1).ravel()
        cols = np.tile(idx, (1, 4)).ravel()
        vals = np.broadcast_to(local[k].ravel(), (c.size, 16)).ravel()
        np.add.at(S, (rows, cols), vals)
    return S


def scatter_pairs(n_nodes: int, local: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    """Assemble a translation-invariant cell-pair form into a dense matrix."""
    local = np.ascontiguousarray(local, dtype=float)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and HAVE_NUMBA:
        return _scatter_pairs_numba(int(n_nodes), local)
    return _scatter_pairs_numpy(int(n_nodes), local)
