"""Named analytic coefficient presets and random smooth samplers.

Preset strings look like ``"1"``, ``"sin"``, ``"sin(0.5, 2)"`` or
``"gauss(0.3, 0.1)"``.
"""
from __future__ import annotations

import re

import numpy as np

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def _args(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    return [float(t) for t in text.split(",")]


def _const(c=0.0):
    return lambda x: np.full(np.shape(x), float(c))


def _lin(c0=0.0, c1=1.0):
    return lambda x: c0 + c1 * np.asarray(x, float)


def _sin(amp=1.0, k=1.0):
    return lambda x: amp * np.sin(k * np.pi * np.asarray(x, float))


def _cos(amp=1.0, k=1.0):
    return lambda x: amp * np.cos(k * np.pi * np.asarray(x, float))


def _gauss(x0=0.5, sigma=0.1, amp=1.0):
    return lambda x: amp * np.exp(-((np.asarray(x, float) - x0) ** 2) / (2.0 * sigma**2))


def _exp(c=1.0, amp=1.0):
    return lambda x: amp * np.exp(c * np.asarray(x, float))


PRESETS = {
    "const": _const,
    "zero": lambda: _const(0.0),
    "one": lambda: _const(1.0),
    "lin": _lin,
    "sin": _sin,
    "cos": _cos,
    "gauss": _gauss,
    "exp": _exp,
}


def parse_preset(text: str):
    """Turn a preset string into a vectorized callable ``x -> values``."""
    text = str(text).strip()
    try:
        return _const(float(text))
    except ValueError:
        pass
    m = _CALL.match(text)
    if not m or m.group(1) not in PRESETS:
        raise ValueError(f"unknown preset {text!r}; known: {sorted(PRESETS)} or a number")
    try:
        return PRESETS[m.group(1)](*_args(m.group(2)))
    except TypeError as exc:
        raise ValueError(f"bad arguments for preset {text!r}: {exc}") from None


def random_cosine_series(rng: np.random.Generator, a: float, b: float, modes: int = 5, decay: float = 2.0):
    """Random smooth function with zero normal derivative at both ends."""
    c = rng.standard_normal(modes) / (1.0 + np.arange(modes)) ** decay
    L = b - a

    def f(x):
        x = np.asarray(x, float)
        k = np.arange(modes)
        return np.cos(np.pi * np.multiply.outer((x - a) / L, k)) @ c

    return f


def random_smooth(rng: np.random.Generator, a: float, b: float, modes: int = 4, scale: float = 1.0):
    """Random trigonometric polynomial on ``[a, b]`` (no boundary constraint)."""
    cs = rng.standard_normal(modes) * scale / (1.0 + np.arange(modes))
    sn = rng.standard_normal(modes) * scale / (1.0 + np.arange(modes))
    L = b - a

    def f(x):
        t = (np.asarray(x, float) - a) / L
        k = np.arange(modes)
        arg = np.pi * np.multiply.outer(t, k)
        return np.cos(arg) @ cs + np.sin(arg) @ sn

    return f


def random_coefficients(rng: np.random.Generator, a: float, b: float, a_min: float = 0.1,
                        nonnegative_f: bool = True):
    """Sample smooth ``(q, a, f)`` with ``a >= a_min`` and, optionally, ``f >= 0``.

    ``f`` is a sum of one to three Gaussian bumps, so it is nonnegative and
    not identically zero.
    """
    q = random_smooth(rng, a, b, scale=2.0)
    base = random_smooth(rng, a, b)
    a_fun = lambda x: a_min + np.asarray(base(x)) ** 2
    nb = rng.integers(1, 4)
    centers = rng.uniform(a, b, nb)
    widths = rng.uniform(0.03, 0.3, nb) * (b - a)
    amps = rng.uniform(0.2, 2.0, nb)
    if nonnegative_f:
        f = lambda x: sum(A * np.exp(-((np.asarray(x, float) - c) ** 2) / (2 * w**2))
                          for A, c, w in zip(amps, centers, widths))
    else:
        f = random_smooth(rng, a, b)
    return q, a_fun, f
