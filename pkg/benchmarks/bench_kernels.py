"""Time the numba and numpy paths of the hot kernels.

    python benchmarks/bench_kernels.py [--n 200] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time of each path,
the speedup and the max relative difference between the two results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nlneumann import _accel
from nlneumann.geometry import Domain, build_grid
from nlneumann.kernels import FracParams, exterior_quadrature
from nlneumann.verification import omega_stiffness


def best_of(fn, repeat):
    fn()  # warm-up (numba compiles on first call)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def rel_diff(a, b):
    ok = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1e-300)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200, help="cells on the unit interval")
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    g = build_grid(Domain.interval(0.0, 1.0), 1.0 / args.n)
    p = FracParams(args.s)
    ext = exterior_quadrature(g.domain, p.s, g.R_trunc)
    targets = np.concatenate([g.interior, ext.points])
    local = np.random.default_rng(0).standard_normal((g.n_cells, 4, 4))

    cases = {
        f"cell_moments ({targets.size} targets x {g.n_cells} cells)":
            lambda nb: _accel.cell_moments(targets, g.domain.a, g.h, g.n_cells, p.alpha, use_numba=nb),
        f"scatter_pairs ({g.n_cells} blocks)":
            lambda nb: _accel.scatter_pairs(g.nodes.size, local, use_numba=nb),
    }
    print(f"n={args.n} s={args.s} repeat={args.repeat}")
    print(f"{'kernel':48s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'rel diff':>9s}")
    for name, fn in cases.items():
        t_nb, a = best_of(lambda: fn(True), args.repeat)
        t_np, b = best_of(lambda: fn(False), args.repeat)
        print(f"{name:48s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {rel_diff(a, b):9.1e}")

    # end-to-end: the stiffness assembly goes through scatter_pairs
    t_s, _ = best_of(lambda: omega_stiffness(g, p), args.repeat)
    print(f"{'omega_stiffness (default path)':48s} {t_s:10.4f}")


if __name__ == "__main__":
    main()
