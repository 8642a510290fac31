"""Run configuration: an INI file with one section per concern.

Example::

    [domain]
    a = 0
    b = 1

    [grid]
    h = 0.005
    # R_trunc defaults to 8 * diameter

    [problem]
    s = 0.5
    q = sin
    a = 1
    f = gauss(0.3, 0.1)
    p = 2

    [solver]
    gamma = 1
    fp_tol = 1e-11

Every key has a default; see ``DEFAULTS``.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .geometry import Domain, Grid, ShellPolicy, build_grid
from .kernels import FracParams
from .presets import parse_preset

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The run configuration is missing, malformed or out of range."""


DEFAULTS: dict[str, dict[str, str]] = {
    "domain": {"a": "0", "b": "1"},
    "grid": {"h": "0.005", "r_trunc": "", "shell_floor": "", "shell_ratio": "2"},
    "problem": {"s": "0.5", "q": "0", "a": "1", "f": "1", "p": "2"},
    "solver": {"gamma": "1", "eps0": "0.1", "eps_max": "0.1", "eps_min": "1e-6", "fp_tol": "1e-11",
               "check_tol": "1e-8", "max_iter": "200"},
    "verify": {"h0": "0.03125", "levels": "3", "pairs": "3", "u": "random", "v": "random"},
    "rates": {"s_values": "0.25, 0.5, 0.75", "h": "0.01", "u": "exp"},
    "oracle": {"n": "33", "s_values": "0.5", "u": "random", "resolution": "64"},
    "maxprinciple": {"trials": "100", "s_values": "0.3, 0.5, 0.7", "h": "0.005", "a_min": "0.1", "tol": "1e-8"},
    "run": {"seed": "0"},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, dict[str, str]]
    seed: int

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def getfloat(self, section: str, key: str) -> float:
        try:
            return float(self.get(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number, got {self.get(section, key)!r}") from None

    def getint(self, section: str, key: str) -> int:
        try:
            return int(self.get(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, got {self.get(section, key)!r}") from None

    def getfloats(self, section: str, key: str) -> tuple[float, ...]:
        try:
            out = _floats(self.get(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a comma-separated list of numbers") from None
        if not out:
            raise ConfigError(f"[{section}] {key} is empty")
        return out

    @property
    def hash(self) -> str:
        """Short digest of the normalized settings (seed excluded)."""
        blob = json.dumps({k: v for k, v in self.values.items() if k != "run"}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # typed views

    def domain(self) -> Domain:
        a, b = self.getfloat("domain", "a"), self.getfloat("domain", "b")
        try:
            return Domain.interval(a, b)
        except ValueError as exc:
            raise ConfigError(f"[domain] {exc}") from None

    def r_trunc(self) -> float | None:
        t = self.get("grid", "r_trunc").strip()
        return float(t) if t else None

    def grid(self, h: float | None = None) -> Grid:
        floor = self.get("grid", "shell_floor").strip()
        policy = ShellPolicy(floor=float(floor) if floor else None, ratio=self.getfloat("grid", "shell_ratio"))
        try:
            return build_grid(self.domain(), self.getfloat("grid", "h") if h is None else h, self.r_trunc(), policy)
        except ValueError as exc:
            raise ConfigError(f"[grid] {exc}") from None

    def params(self, s: float | None = None) -> FracParams:
        try:
            return FracParams(self.getfloat("problem", "s") if s is None else s)
        except ValueError as exc:
            raise ConfigError(f"[problem] {exc}") from None

    def preset(self, section: str, key: str):
        try:
            return parse_preset(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    def tolerances(self) -> dict[str, float]:
        return {"fp_tol": self.getfloat("solver", "fp_tol"), "check_tol": self.getfloat("solver", "check_tol"),
                "eps_min": self.getfloat("solver", "eps_min")}


def _validate(cfg: RunConfig):
    cfg.domain()
    cfg.params()
    for s in cfg.getfloats("rates", "s_values") + cfg.getfloats("maxprinciple", "s_values") + cfg.getfloats("oracle", "s_values"):
        cfg.params(s)
    for key in ("q", "a", "f"):
        cfg.preset("problem", key)
    for sec in ("verify", "rates", "oracle"):
        for key in ("u", "v"):
            if key in cfg.values[sec] and cfg.get(sec, key).strip() != "random":
                cfg.preset(sec, key)
    for sec, key in (("solver", "fp_tol"), ("solver", "check_tol"), ("solver", "eps_min"), ("solver", "eps0"),
                     ("solver", "eps_max"), ("maxprinciple", "tol"), ("grid", "h"), ("verify", "h0"), ("rates", "h")):
        if not cfg.getfloat(sec, key) > 0:
            raise ConfigError(f"[{sec}] {key} must be positive")
    gamma = cfg.getfloat("solver", "gamma")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError("[solver] gamma must lie in [0, 1]")
    for sec, key in (("verify", "levels"), ("verify", "pairs"), ("oracle", "n"), ("maxprinciple", "trials"),
                     ("solver", "max_iter"), ("oracle", "resolution")):
        if cfg.getint(sec, key) < 1:
            raise ConfigError(f"[{sec}] {key} must be at least 1")
    if cfg.getint("oracle", "n") > 65:
        raise ConfigError("[oracle] n must be at most 65 (dense brute force)")
    cfg.grid()
    from .verification import admissible_exponent

    p_exp = cfg.getfloat("problem", "p")
    if not admissible_exponent(cfg.params().s, p_exp):
        log.warning("(s, p) = (%g, %g) lies outside the range where the W^{2,p} bound is expected",
                    cfg.params().s, p_exp)


def load_config(path: str | Path | None, seed: int | None = None) -> RunConfig:
    """Read and validate a config file; ``path=None`` gives the defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    values = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    for sec in parser.sections():
        if sec not in values:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in parser.items(sec):
            if key not in values[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            values[sec][key] = val.strip()
    try:
        file_seed = int(values["run"]["seed"])
    except ValueError:
        raise ConfigError("[run] seed must be an integer") from None
    cfg = RunConfig(values, file_seed if seed is None else int(seed))
    _validate(cfg)
    return cfg
