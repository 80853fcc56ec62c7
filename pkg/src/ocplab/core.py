"""Geometry primitives: point configurations, windows, and the dyadic partition of unity.

Everything here is immutable after construction and safe to share between
threads / processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import smoothstep


class DomainError(ValueError):
    """A point lies outside the domain it is required to be in."""


# ---------------------------------------------------------------------------
# Point configurations


class PointConfig:
    """A finite planar point configuration at unit mean density.

    Wraps an (n, 2) float array. Coordinates must be finite and pairwise
    distinct (the interaction energy is +inf at a coincidence, and the Gibbs
    measure almost surely produces none, so we reject duplicates outright).
    """

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        if len(pts) > 1:
            # exact-duplicate check; O(n log n)
            order = np.lexsort(pts.T)
            s = pts[order]
            if np.any(np.all(s[1:] == s[:-1], axis=1)):
                raise ValueError("coincident points are not allowed")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __setattr__(self, *a):
        raise AttributeError("PointConfig is immutable")

    @property
    def n(self) -> int:
        return len(self.points)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointConfig(n={self.n})"

    def restrict(self, window) -> "PointConfig":
        """Points inside the (closed) window."""
        if self.n == 0:
            return self
        return PointConfig(self.points[window.contains(self.points)])

    def exclude(self, window) -> "PointConfig":
        """Points strictly outside the window."""
        if self.n == 0:
            return self
        return PointConfig(self.points[~window.contains(self.points)])


def local_view(config: PointConfig, x) -> PointConfig:
    """The configuration seen from x, i.e. every point shifted by -x."""
    x = np.asarray(x, dtype=float)
    return PointConfig(config.points - x)


def pts_count(config: PointConfig, window) -> int:
    """Number of points of `config` inside the closed window."""
    if config.n == 0:
        return 0
    return int(np.count_nonzero(window.contains(config.points)))


# ---------------------------------------------------------------------------
# Windows and domains


@dataclass(frozen=True)
class DiskDomain:
    """A closed disk; the system domain is the disk of area N centered at 0."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
        return d2 <= self.radius**2 * (1 + 1e-15)

    def sample_uniform(self, n, rng) -> np.ndarray:
        pts = np.empty((n, 2))
        got = 0
        while got < n:
            cand = rng.uniform(-self.radius, self.radius, size=(2 * (n - got) + 8, 2))
            cand = cand[np.einsum("ij,ij->i", cand, cand) <= self.radius**2]
            take = min(len(cand), n - got)
            pts[got : got + take] = cand[:take]
            got += take
        return pts + np.asarray(self.center)

    @property
    def bounding_radius(self) -> float:
        return math.hypot(*self.center) + self.radius


def system_domain(n_points: int) -> DiskDomain:
    """The hard-wall disk of area n_points centered at the origin."""
    if n_points < 1:
        raise ValueError("need at least one point")
    return DiskDomain((0.0, 0.0), math.sqrt(n_points / math.pi))


def bulk_margin(x, n_points: int) -> float:
    """dist(x, boundary of the system disk) / sqrt(N); must be positive in the bulk."""
    dom = system_domain(n_points)
    r = math.hypot(x[0] - dom.center[0], x[1] - dom.center[1])
    if r > dom.radius * (1 + 1e-12):
        raise DomainError(f"point at radius {r:.6g} outside system disk of radius {dom.radius:.6g}")
    return (dom.radius - min(r, dom.radius)) / math.sqrt(n_points)


@dataclass(frozen=True)
class RectWindow:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("degenerate rectangle")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def center(self):
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (
            (pts[:, 0] >= self.xmin)
            & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin)
            & (pts[:, 1] <= self.ymax)
        )

    def sample_uniform(self, n, rng) -> np.ndarray:
        out = np.empty((n, 2))
        out[:, 0] = rng.uniform(self.xmin, self.xmax, n)
        out[:, 1] = rng.uniform(self.ymin, self.ymax, n)
        return out

    @property
    def bounding_radius(self) -> float:
        return max(
            math.hypot(x, y)
            for x in (self.xmin, self.xmax)
            for y in (self.ymin, self.ymax)
        )


@dataclass(frozen=True)
class AnnulusWindow:
    center: tuple
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (0 <= self.r_inner < self.r_outer):
            raise ValueError("need 0 <= r_inner < r_outer")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
        return (d2 >= self.r_inner**2 * (1 - 1e-15)) & (d2 <= self.r_outer**2 * (1 + 1e-15))

    def sample_uniform(self, n, rng) -> np.ndarray:
        # exact radial inversion, no rejection needed
        u = rng.random(n)
        r = np.sqrt(self.r_inner**2 + u * (self.r_outer**2 - self.r_inner**2))
        th = rng.uniform(0, 2 * math.pi, n)
        return np.column_stack(
            (self.center[0] + r * np.cos(th), self.center[1] + r * np.sin(th))
        )

    @property
    def bounding_radius(self) -> float:
        return math.hypot(*self.center) + self.r_outer


DiskWindow = DiskDomain  # a disk is both a confinement domain and a window


def translate_window(window, u):
    """The same window shifted by the vector u."""
    ux, uy = float(u[0]), float(u[1])
    if isinstance(window, DiskDomain):
        return DiskDomain((window.center[0] + ux, window.center[1] + uy), window.radius)
    if isinstance(window, RectWindow):
        return RectWindow(
            window.xmin + ux, window.xmax + ux, window.ymin + uy, window.ymax + uy
        )
    if isinstance(window, AnnulusWindow):
        return AnnulusWindow(
            (window.center[0] + ux, window.center[1] + uy),
            window.r_inner,
            window.r_outer,
        )
    raise TypeError(f"unsupported window type {type(window).__name__}")


# ---------------------------------------------------------------------------
# Dyadic partition of unity
#
# chi_0 is 1 on D(1) and falls to 0 on [1, 2]; for i >= 1, chi_i lives on the
# annulus [2^{i-1}, 2^{i+1}]. The family telescopes from a single radial
# cutoff theta_i (1 for r <= 2^i, 0 for r >= 2^{i+1}), so the pointwise sum
# is identically 1 and the partial sums needed elsewhere are a single cutoff
# evaluation.


@dataclass(frozen=True)
class DyadicPartition:
    """Smooth radial partition of unity on dyadic annuli.

    `c_chi` is the measured smoothness constant: the grid maximum over
    i <= i_measured and k <= 3 of |chi_i|_k * 2^{i k}.
    """

    c_chi: float
    i_measured: int = 12

    # -- radial cutoffs ----------------------------------------------------
    @staticmethod
    def _theta(i: int, r: np.ndarray) -> np.ndarray:
        """1 for r <= 2^i, smooth descent to 0 on [2^i, 2^{i+1}]."""
        a = 2.0**i
        return 1.0 - smoothstep.value((np.asarray(r, dtype=float) - a) / a)

    @staticmethod
    def _theta_dr(i: int, r: np.ndarray, order: int = 1) -> np.ndarray:
        a = 2.0**i
        t = (np.asarray(r, dtype=float) - a) / a
        return -smoothstep.derivative(t, order) / a**order

    def chi_radial(self, i: int, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if i == 0:
            return self._theta(0, r)
        return self._theta(i, r) - self._theta(i - 1, r)

    def chi_radial_dr(self, i: int, r, order: int = 1) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if i == 0:
            return self._theta_dr(0, r, order)
        return self._theta_dr(i, r, order) - self._theta_dr(i - 1, r, order)

    def chi(self, i: int, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.chi_radial(i, np.hypot(pts[:, 0], pts[:, 1]))

    def sum_upto(self, p: int, r) -> np.ndarray:
        """sum_{i<=p} chi_i(r); exactly theta_p by telescoping."""
        return self._theta(p, r)

    def support(self, i: int) -> tuple:
        """(r_lo, r_hi) outside which chi_i vanishes identically."""
        return (0.0, 2.0) if i == 0 else (2.0 ** (i - 1), 2.0 ** (i + 1))

    def seminorm(self, i: int, k: int, n_grid: int = 4096) -> float:
        """Grid-measured |chi_i|_k using the radial/tangential frame formulas."""
        lo, hi = self.support(i)
        r = np.linspace(max(lo, 1e-9), hi, n_grid)
        return radial_seminorm(
            self.chi_radial(i, r),
            self.chi_radial_dr(i, r, 1),
            self.chi_radial_dr(i, r, 2),
            self.chi_radial_dr(i, r, 3),
            r,
            k,
        )


def radial_seminorm(u, du, d2u, d3u, r, k: int) -> float:
    """Directional-derivative seminorm of a radial function on a radius grid.

    For u(|x|) the gradient is radial (u'), the Hessian has eigenvalues u''
    and u'/r, and the third-derivative tensor has frame components built from
    u''', u''/r and u'/r^2; we take the max over these directional values.
    """
    r = np.asarray(r, dtype=float)
    if k == 0:
        return float(np.max(np.abs(u)))
    if k == 1:
        return float(np.max(np.abs(du)))
    if k == 2:
        return float(max(np.max(np.abs(d2u)), np.max(np.abs(du / r))))
    if k == 3:
        tang = d2u / r - du / r**2
        return float(max(np.max(np.abs(d3u)), np.max(np.abs(tang))))
    raise ValueError("k must be 0..3")


@lru_cache(maxsize=1)
def build_dyadic_partition(i_measured: int = 12) -> DyadicPartition:
    """Construct the partition and measure its smoothness constant once."""
    part = DyadicPartition(c_chi=0.0, i_measured=i_measured)
    c = 0.0
    for i in range(i_measured + 1):
        for k in range(4):
            c = max(c, part.seminorm(i, k) * 2.0 ** (i * k))
    return DyadicPartition(c_chi=c, i_measured=i_measured)
