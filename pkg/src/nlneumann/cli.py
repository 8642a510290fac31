"""Command-line front end.

    nlneumann solve|verify|rates|oracle|maxprinciple [--config PATH] [--out DIR] [--seed N] [--threads N]

Exit status: 0 success, 2 configuration error, 3 numerical failure.
Every CSV starts with ``# key: value`` header lines (config hash, seed, s,
h, R_trunc, tolerances); see docs/output_formats.md for the columns.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import _accel
from .config import ConfigError, RunConfig, load_config

log = logging.getLogger("nlneumann")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    """A run finished but its own checks failed."""


# ---------------------------------------------------------------- output


def atomic_write(path: Path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def header(cfg: RunConfig, s, h, R_trunc, **extra) -> dict:
    out = {
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "s": s,
        "h": h,
        "R_trunc": R_trunc,
        "tolerances": " ".join(f"{k}={_fmt(v)}" for k, v in cfg.tolerances().items()),
    }
    out.update(extra)
    return out


def csv_text(head: dict, columns, rows) -> str:
    buf = io.StringIO()
    for k, v in head.items():
        buf.write(f"# {k}: {_fmt(v) if not isinstance(v, (list, tuple)) else ','.join(_fmt(x) for x in v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) if isinstance(r, dict) else _fmt(getattr(r, c)) for c in columns])
    return buf.getvalue()


def _rng(cfg: RunConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream])


def _func(cfg: RunConfig, section: str, key: str, rng: np.random.Generator):
    from .presets import random_cosine_series

    if cfg.get(section, key).strip() == "random":
        d = cfg.domain()
        return random_cosine_series(rng, d.a, d.b)
    return cfg.preset(section, key)


# ---------------------------------------------------------------- commands


def cmd_solve(cfg: RunConfig, out: Path) -> list[str]:
    from .extension import extension_matrix
    from .solver import EpsPolicy, ProblemData, continuation_solve

    grid, p = cfg.grid(), cfg.params()
    pd = ProblemData(grid, cfg.preset("problem", "q"), cfg.preset("problem", "a"), cfg.preset("problem", "f"), p)
    policy = EpsPolicy(eps0=cfg.getfloat("solver", "eps0"), eps_max=cfg.getfloat("solver", "eps_max"),
                       eps_min=cfg.getfloat("solver", "eps_min"), tol=cfg.getfloat("solver", "fp_tol"),
                       max_iter=cfg.getint("solver", "max_iter"))
    check_tol = cfg.getfloat("solver", "check_tol")
    u, trace = continuation_solve(pd, cfg.getfloat("solver", "gamma"), policy, check_tol=check_tol)
    E, _ = extension_matrix(grid.exterior, grid, p)
    ext = E @ u.values
    head = header(cfg, p.s, grid.h, grid.R_trunc)
    atomic_write(out / "solution.csv", csv_text(head, ("x", "u"),
                                                [{"x": x, "u": v} for x, v in zip(grid.nodes, u.values)]))
    atomic_write(out / "trace.csv", trace.to_csv({k: _fmt(v) for k, v in head.items()}))

    tol = cfg.getfloat("maxprinciple", "tol")
    vals = u.values
    violations = 0
    if np.all(pd.f >= 0):
        violations += int(vals.min() < -tol) + int(ext.min() < vals.min() - tol)
    lines = [
        f"config_hash: {cfg.hash}",
        f"seed: {cfg.seed}",
        f"s: {p.s}  h: {grid.h}  R_trunc: {grid.R_trunc}  nodes: {grid.nodes.size}",
        f"gamma steps: {len(trace.records) - 1}  rejected steps: {trace.rejected}",
        f"min u: {vals.min():.12g}  max u: {vals.max():.12g}  sup norm: {np.max(np.abs(vals)):.3e}",
        f"sup |u - 1|: {np.max(np.abs(vals - 1.0)):.3e}",
        f"min exterior u~: {ext.min():.12g}",
        f"continuation vs direct: {trace.direct_mismatch:.3e} (tolerance {check_tol:g})",
        f"max-principle violations: {violations}",
    ]
    atomic_write(out / "summary.txt", "\n".join(lines) + "\n")
    if trace.flagged:
        raise NumericalFailure(f"continuation differs from the direct solve by {trace.direct_mismatch:.3e}")
    return lines


def cmd_verify(cfg: RunConfig, out: Path) -> list[str]:
    from .verification import REPORT_COLUMNS, refinement_study, seminorms, FormAssembly

    rng = _rng(cfg, 1)
    npairs = cfg.getint("verify", "pairs")
    pairs = [(_func(cfg, "verify", "u", rng), _func(cfg, "verify", "v", rng)) for _ in range(npairs)]
    s = cfg.params().s
    h0, levels = cfg.getfloat("verify", "h0"), cfg.getint("verify", "levels")
    try:
        study = refinement_study(pairs, s, cfg.domain(), h0, levels)
    except ValueError as exc:
        raise ConfigError(f"[verify] {exc}") from None
    rows, lines = [], []
    for kind, per_pair in study.items():
        worst = np.zeros(levels)
        for j, reps in enumerate(per_pair):
            for lev, r in enumerate(reps):
                rows.append({"pair": j, "level": lev, **r.row()})
                worst[lev] = max(worst[lev], r.rel_error)
        lines.append(f"{kind}: worst relative error per level " + ", ".join(f"{e:.3e}" for e in worst))
    head = header(cfg, s, h0, cfg.r_trunc() or 8.0 * cfg.domain().diameter, levels=levels, pairs=npairs)
    atomic_write(out / "identities.csv", csv_text(head, ("pair", "level") + REPORT_COLUMNS, rows))

    grid, p = cfg.grid(h0), cfg.params()
    from .extension import GridFunction

    fa = FormAssembly(grid, p)
    srows = []
    for j, (uf, _) in enumerate(pairs):
        sn = seminorms(GridFunction.from_callable(grid, uf), p, fa=fa)
        srows.append({"pair": j, "gagliardo": sn.gagliardo, "regional": sn.regional, "l1s": sn.l1s})
    atomic_write(out / "seminorms.csv", csv_text(header(cfg, s, grid.h, grid.R_trunc),
                                                 ("pair", "gagliardo", "regional", "l1s"), srows))
    return lines


def cmd_rates(cfg: RunConfig, out: Path) -> list[str]:
    from .verification import RATE_COLUMNS, rates_campaign

    s_values = cfg.getfloats("rates", "s_values")
    h = cfg.getfloat("rates", "h")
    u_func = _func(cfg, "rates", "u", _rng(cfg, 2))
    try:
        rows = rates_campaign(s_values, cfg.domain(), h, u_func)
    except ValueError as exc:
        raise ConfigError(f"[rates] {exc}") from None
    grid = cfg.grid(h)
    atomic_write(out / "rates.csv", csv_text(header(cfg, list(s_values), h, grid.R_trunc), RATE_COLUMNS, rows))
    return [f"s={r.s:g} {r.quantity}: slope {r.slope:.4f} [{r.band_lo:.4f}, {r.band_hi:.4f}] target {r.target:g}"
            + (f" log model preferred: {str(r.log_preferred).lower()}" if r.quantity == "gradient" else "")
            for r in rows]


ORACLE_COLUMNS = ("quantity", "s", "n", "resolution", "max_abs_diff", "max_rel_diff")


def cmd_oracle(cfg: RunConfig, out: Path) -> list[str]:
    from .geometry import build_grid
    from .kernels import regional_kernel
    from .operators import discretization
    from .verification import brute_force_frac_laplacian, brute_force_regional_kernel

    n = cfg.getint("oracle", "n")
    d = cfg.domain()
    grid = build_grid(d, d.length / (n - 1), cfg.r_trunc())
    rng = _rng(cfg, 3)
    u_func = _func(cfg, "oracle", "u", rng)
    vals = np.asarray(u_func(grid.nodes), float) * np.ones(grid.nodes.size)
    res = cfg.getint("oracle", "resolution")
    rows, lines = [], []
    for s in cfg.getfloats("oracle", "s_values"):
        p = cfg.params(s)
        M = discretization(grid, p).frac_matrix
        for r in (res, 2 * res):
            diffs = np.array([abs(brute_force_frac_laplacian(vals, grid, p, i, resolution=r) - M[i] @ vals)
                              for i in range(1, grid.nodes.size - 1)])
            scale = np.maximum(np.abs(M[1:-1] @ vals), 1e-300)
            rows.append({"quantity": "frac_laplacian", "s": s, "n": n, "resolution": r,
                         "max_abs_diff": float(diffs.max()), "max_rel_diff": float(np.max(diffs / scale))})
        pts = grid.nodes[1:-1]
        idx = rng.choice(pts.size, size=(8, 2), replace=True)
        kd, kr = [], []
        for i, j in idx:
            if i == j:
                continue
            ref = brute_force_regional_kernel(pts[i], pts[j], d, p)
            val = regional_kernel(pts[i], pts[j], d, p, R_trunc=grid.R_trunc)
            kd.append(abs(val - ref))
            kr.append(abs(val - ref) / abs(ref))
        rows.append({"quantity": "regional_kernel", "s": s, "n": n, "resolution": 0,
                     "max_abs_diff": max(kd, default=0.0), "max_rel_diff": max(kr, default=0.0)})
    atomic_write(out / "oracle.csv", csv_text(header(cfg, list(cfg.getfloats("oracle", "s_values")), grid.h,
                                                     grid.R_trunc), ORACLE_COLUMNS, rows))
    for r in rows:
        lines.append(f"{r['quantity']} s={r['s']:g} resolution={r['resolution']}: max abs diff "
                     f"{r['max_abs_diff']:.3e}, max rel diff {r['max_rel_diff']:.3e}")
    return lines


CAMPAIGN_COLUMNS = ("trial", "seed", "s", "min_u", "min_ext", "violation")


def cmd_maxprinciple(cfg: RunConfig, out: Path) -> list[str]:
    from .presets import random_coefficients
    from .verification import max_principle_campaign

    a_min = cfg.getfloat("maxprinciple", "a_min")
    h = cfg.getfloat("maxprinciple", "h")
    sampler = lambda rng, d: random_coefficients(rng, d.a, d.b, a_min=a_min)
    try:
        summary = max_principle_campaign(cfg.getint("maxprinciple", "trials"), cfg.seed, sampler,
                                         cfg.getfloats("maxprinciple", "s_values"), cfg.domain(), h,
                                         cfg.getfloat("maxprinciple", "tol"))
    except ValueError as exc:
        raise ConfigError(f"[maxprinciple] {exc}") from None
    grid = cfg.grid(h)
    head = header(cfg, list(cfg.getfloats("maxprinciple", "s_values")), h, grid.R_trunc)
    atomic_write(out / "campaign.csv", csv_text(head, CAMPAIGN_COLUMNS, summary.records))
    lines = [f"trials: {len(summary.records)}  violations: {len(summary.violations)}",
             f"smallest min u: {min(r.min_u for r in summary.records):.6e}",
             f"smallest min u~ - min u: {min(r.min_ext - r.min_u for r in summary.records):.6e}"]
    lines += [f"violation trial {r.trial} seed {r.seed}: min u {r.min_u!r}, min ext {r.min_ext!r}"
              for r in summary.violations]
    if not summary.passed:
        atomic_write(out / "summary.txt", "\n".join(lines) + "\n")
        raise NumericalFailure(f"{len(summary.violations)} maximum-principle violations")
    return lines


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "rates": cmd_rates, "oracle": cmd_oracle,
            "maxprinciple": cmd_maxprinciple}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlneumann", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="INI run configuration (defaults if omitted)")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--seed", type=int, help="RNG seed (overrides [run] seed)")
    ap.add_argument("--threads", type=int, default=1, help="numba worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    _accel.set_threads(args.threads)
    from .solver import SolverError

    try:
        cfg = load_config(args.config, args.seed)
        lines = COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
