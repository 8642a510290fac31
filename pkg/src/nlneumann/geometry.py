"""Domains, distances to the boundary and grids (interior, boundary, exterior shells)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Domain:
    """An interval ``(a, b)`` or a disk ``B(center, radius)``."""

    kind: str
    a: float = 0.0
    b: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind == "interval":
            if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
                raise ValueError(f"interval needs a < b, got ({self.a}, {self.b})")
        elif self.kind == "disk":
            if not self.radius > 0:
                raise ValueError(f"disk radius must be positive, got {self.radius}")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def interval(cls, a: float = 0.0, b: float = 1.0) -> "Domain":
        return cls("interval", a=float(a), b=float(b))

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius: float = 1.0) -> "Domain":
        c = tuple(float(v) for v in center)
        if len(c) != 2:
            raise ValueError("disk center must be a 2-vector")
        return cls("disk", center=c, radius=float(radius))

    @property
    def dimension(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def diameter(self) -> float:
        return self.b - self.a if self.kind == "interval" else 2.0 * self.radius

    @property
    def measure(self) -> float:
        return self.b - self.a if self.kind == "interval" else np.pi * self.radius**2

    @property
    def length(self) -> float:
        if self.kind != "interval":
            raise AttributeError("length is only defined for intervals")
        return self.b - self.a

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 1:
            return x
        if x.shape[-1] != 2:
            raise ValueError("disk points must have a trailing dimension of 2")
        return x

    def signed_distance(self, x) -> np.ndarray:
        """Negative inside, positive outside, zero on the boundary."""
        x = self._points(x)
        if self.kind == "interval":
            mid = 0.5 * (self.a + self.b)
            return np.abs(x - mid) - 0.5 * (self.b - self.a)
        r = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return r - self.radius

    def contains(self, x) -> np.ndarray:
        """Strict membership in the open set."""
        return self.signed_distance(x) < 0.0

    def outward_normal(self, xb) -> np.ndarray:
        """Unit outward normal at boundary point(s)."""
        xb = self._points(xb)
        if self.kind == "interval":
            mid = 0.5 * (self.a + self.b)
            return np.where(xb >= mid, 1.0, -1.0)
        v = xb - np.asarray(self.center)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)


def distance_to_boundary(x, d: Domain):
    """``dist(x, boundary)`` for points inside or outside; scalar in, scalar out."""
    out = np.abs(d.signed_distance(x))
    return float(out) if np.ndim(out) == 0 else out


def nearest_boundary_point(x, d: Domain):
    """The boundary point closest to an exterior point ``x``."""
    sd = d.signed_distance(x)
    if np.any(sd <= 0.0):
        raise ValueError("nearest_boundary_point is defined for points outside the closed domain")
    if d.kind == "interval":
        x = np.asarray(x, dtype=float)
        out = np.where(x > d.b, d.b, d.a)
        return float(out) if out.ndim == 0 else out
    x = np.asarray(x, dtype=float)
    c = np.asarray(d.center)
    v = x - c
    return c + d.radius * v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class ShellPolicy:
    """How exterior shells are laid out.

    Distances ``h * 2**-k`` down to ``floor`` (default ``h**2``), then a
    geometric sequence with ``ratio`` out to the truncation radius.
    ``n_angles`` is the number of rays per shell on a disk.
    """

    floor: float | None = None
    ratio: float = 2.0
    n_angles: int = 32


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    h: float
    R_trunc: float
    interior: np.ndarray
    boundary: np.ndarray
    exterior: np.ndarray
    exterior_delta: np.ndarray
    shell_deltas: np.ndarray
    delta_min: float
    policy: ShellPolicy = field(default_factory=ShellPolicy)

    @property
    def nodes(self) -> np.ndarray:
        """Closure nodes in the order used for unknowns (1D: sorted, ends included)."""
        if self.domain.dimension != 1:
            return np.concatenate([self.interior, self.boundary])
        return np.concatenate([[self.domain.a], self.interior, [self.domain.b]])

    @property
    def n_cells(self) -> int:
        if self.domain.dimension != 1:
            raise AttributeError("cells are only defined on 1D grids")
        return self.interior.size + 1

    @property
    def size(self) -> int:
        return len(self.interior) + len(self.boundary) + len(self.exterior)


def _shell_deltas(h: float, R_trunc: float, floor: float, ratio: float) -> np.ndarray:
    near = []
    d = h
    while d > floor * (1.0 + 1e-12):
        near.append(d)
        d *= 0.5
    near.append(floor)
    far = []
    d = h * ratio
    while d < R_trunc * (1.0 - 1e-12):
        far.append(d)
        d *= ratio
    far.append(R_trunc)
    return np.unique(np.array(near + far))


def build_grid(d: Domain, h: float, R_trunc: float | None = None, shell_policy: ShellPolicy | None = None) -> Grid:
    """Uniform interior nodes plus graded exterior shells.

    ``R_trunc`` defaults to ``8 * diam``.  On an interval ``h`` must divide
    the length.
    """
    policy = shell_policy or ShellPolicy()
    if not h > 0:
        raise ValueError("h must be positive")
    diam = d.diameter
    too_big = h > diam / 2 if d.kind == "interval" else h >= d.radius
    if too_big:
        raise ValueError(f"h={h} is too large for a domain of diameter {diam}")
    if R_trunc is None:
        R_trunc = 8.0 * diam
    if R_trunc < 2.0 * diam:
        raise ValueError("R_trunc must be at least 2 * diam(domain)")
    floor = policy.floor if policy.floor is not None else h * h
    if not 0 < floor <= h:
        raise ValueError("shell floor must lie in (0, h]")
    deltas = _shell_deltas(h, R_trunc, floor, policy.ratio)

    if d.kind == "interval":
        n = int(round(d.length / h))
        if abs(n * h - d.length) > 1e-9 * d.length:
            raise ValueError(f"h={h} does not divide the interval length {d.length}")
        h = d.length / n
        interior = d.a + h * np.arange(1, n)
        boundary = np.array([d.a, d.b])
        exterior = np.concatenate([d.a - deltas[::-1], d.b + deltas])
        ext_delta = np.concatenate([deltas[::-1], deltas])
    else:
        c = np.asarray(d.center)
        m = int(np.ceil(d.radius / h)) + 1
        g = h * np.arange(-m, m + 1)
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1) + c
        r = np.linalg.norm(pts - c, axis=1)
        # keep a margin so no lattice node sits numerically on the circle
        interior = pts[r < d.radius * (1.0 - 1e-9)]
        nb = max(8, int(np.ceil(2 * np.pi * d.radius / h)))
        th = 2 * np.pi * np.arange(nb) / nb
        boundary = c + d.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        na = policy.n_angles
        ta = 2 * np.pi * (np.arange(na) + 0.5) / na
        dirs = np.stack([np.cos(ta), np.sin(ta)], axis=1)
        exterior = (c + (d.radius + deltas)[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
        ext_delta = np.repeat(deltas, na)
    return Grid(
        domain=d,
        h=float(h),
        R_trunc=float(R_trunc),
        interior=interior,
        boundary=boundary,
        exterior=exterior,
        exterior_delta=ext_delta,
        shell_deltas=deltas,
        delta_min=float(floor),
        policy=policy,
    )
