"""Logarithmic interaction energies with neutralizing background.

Total energy of a configuration X against background Lebesgue measure on a
region Lambda splits as

    F = pp + pb + bb
    pp = sum_{i<j} -log|x_i - x_j|
    pb = -sum_i V_Lambda(x_i),   V_Lambda(x) = int_Lambda -log|x-y| dy
    bb = (1/2) iint_{Lambda^2} -log|x-y| dx dy

Disk and rectangle background potentials have closed forms (the rectangle one
via the double antiderivative of log r); annulus potentials are disk
differences. Background self-energies fall back to adaptive quadrature for
non-disk windows and are memoized per window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.spatial.distance import cdist, pdist

from .core import AnnulusWindow, DiskDomain, DomainError, PointConfig, RectWindow

QUAD_ABS_TOL = 1e-8


@dataclass(frozen=True)
class EnergyBreakdown:
    point_point: float
    point_background: float
    background_background: float

    @property
    def total(self) -> float:
        return self.point_point + self.point_background + self.background_background


# ---------------------------------------------------------------------------
# kernels and background potentials


def log_kernel(x, y) -> float:
    """-log|x - y|; +inf at coincidence."""
    d = math.hypot(x[0] - y[0], x[1] - y[1])
    return math.inf if d == 0.0 else -math.log(d)


def disk_background_potential(x, radius, center=(0.0, 0.0)):
    """int_{disk} -log|x - y| dy, vectorized over rows of x.

    Inside: pi R^2 (-log R) + pi (R^2 - |x|^2) / 2; outside: -pi R^2 log|x|
    (the mean-value property of the log potential).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0] - center[0], x[:, 1] - center[1])
    R = float(radius)
    m = math.pi * R * R
    inside = m * (-math.log(R)) + math.pi * (R * R - r * r) / 2.0
    with np.errstate(divide="ignore"):
        outside = -m * np.log(np.maximum(r, 1e-300))
    return np.where(r <= R, inside, outside)


def _rect_antideriv(u, v):
    """Double antiderivative of log sqrt(u^2 + v^2) in u and v."""
    r2 = u * u + v * v
    safe = r2 > 0
    r2s = np.where(safe, r2, 1.0)
    us = np.where(u != 0, u, 1.0)
    vs = np.where(v != 0, v, 1.0)
    term = (
        0.5 * u * v * np.log(r2s)
        - 1.5 * u * v
        + np.where(u != 0, 0.5 * u * u * np.arctan(v / us), 0.0)
        + np.where(v != 0, 0.5 * v * v * np.arctan(u / vs), 0.0)
    )
    return np.where(safe, term, 0.0)


def rect_background_potential(x, window: RectWindow):
    """int_{rect} -log|x - y| dy via corner inclusion-exclusion."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    px, py = x[:, 0], x[:, 1]
    P = _rect_antideriv
    integral = (
        P(window.xmax - px, window.ymax - py)
        - P(window.xmin - px, window.ymax - py)
        - P(window.xmax - px, window.ymin - py)
        + P(window.xmin - px, window.ymin - py)
    )
    return -integral


def annulus_background_potential(x, window: AnnulusWindow):
    out = disk_background_potential(x, window.r_outer, window.center)
    if window.r_inner > 0:
        out = out - disk_background_potential(x, window.r_inner, window.center)
    return out


def background_potential(x, window):
    """int_window -log|x - y| dy for any supported window, vectorized."""
    if isinstance(window, DiskDomain):
        return disk_background_potential(x, window.radius, window.center)
    if isinstance(window, RectWindow):
        return rect_background_potential(x, window)
    if isinstance(window, AnnulusWindow):
        return annulus_background_potential(x, window)
    raise TypeError(f"unsupported window type {type(window).__name__}")


@lru_cache(maxsize=256)
def background_self_energy(window) -> float:
    """(1/2) iint_{window^2} -log|x - y| dx dy, memoized per window."""
    if isinstance(window, DiskDomain):
        m = window.area
        return 0.5 * m * m * (-math.log(window.radius) + 0.25)
    if isinstance(window, AnnulusWindow):
        # radial quadrature of the closed-form annulus potential
        def integrand(r):
            v = annulus_background_potential(
                [[window.center[0] + r, window.center[1]]], window
            )
            return 2.0 * math.pi * r * float(v[0])

        val, _ = quad(
            integrand, window.r_inner, window.r_outer, epsabs=QUAD_ABS_TOL, limit=200
        )
        return 0.5 * val
    if isinstance(window, RectWindow):
        def integrand(y, x):
            return float(rect_background_potential([[x, y]], window)[0])

        val, _ = dblquad(
            integrand,
            window.xmin,
            window.xmax,
            window.ymin,
            window.ymax,
            epsabs=QUAD_ABS_TOL,
        )
        return 0.5 * val
    raise TypeError(f"unsupported window type {type(window).__name__}")


# ---------------------------------------------------------------------------
# pair sums


def _ordered_sum(values) -> float:
    """Sum after sorting, so the result only depends on the multiset of terms.

    This makes energies bitwise identical under relabeling of the points.
    """
    return float(np.sum(np.sort(values)))


def pair_interaction(points) -> float:
    """sum_{i<j} -log|x_i - x_j|; +inf if any two rows coincide."""
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    d = pdist(points)
    if np.any(d == 0.0):
        return math.inf
    return -_ordered_sum(np.log(d))


def cross_interaction(a, b) -> float:
    """sum over pairs (x in a, y in b) of -log|x - y|."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        return 0.0
    d = cdist(a, b)
    if np.any(d == 0.0):
        return math.inf
    return float(-np.sum(np.log(d)))


# ---------------------------------------------------------------------------
# assembled energies


def interaction_energy(config: PointConfig, domain: DiskDomain) -> EnergyBreakdown:
    """Energy of a configuration confined to a hard disk with its background."""
    if config.n and not np.all(domain.contains(config.points)):
        raise DomainError("configuration has points outside the confinement disk")
    return local_energy(config, domain, check=False)


def local_energy(config: PointConfig, window, check: bool = True) -> EnergyBreakdown:
    """Energy of the points in a window against the background it carries."""
    if check and config.n and not np.all(window.contains(config.points)):
        raise DomainError("configuration has points outside the window")
    pp = pair_interaction(config.points)
    if config.n:
        pb = -_ordered_sum(background_potential(config.points, window))
    else:
        pb = 0.0
    bb = background_self_energy(window)
    return EnergyBreakdown(pp, pb, bb)


def delta_energy_move(config: PointConfig, i: int, newpos, domain: DiskDomain) -> float:
    """F(X with x_i moved to newpos) - F(X), in O(N)."""
    if not 0 <= i < config.n:
        raise IndexError(f"particle index {i} out of range for n={config.n}")
    newpos = np.asarray(newpos, dtype=float)
    if not domain.contains(newpos[None, :])[0]:
        raise DomainError("proposed position outside the confinement disk")
    others = np.delete(config.points, i, axis=0)
    old = config.points[i]
    if np.array_equal(newpos, old):
        return 0.0
    d_new = np.hypot(others[:, 0] - newpos[0], others[:, 1] - newpos[1])
    if len(others) and np.any(d_new == 0.0):
        return math.inf
    d_old = np.hypot(others[:, 0] - old[0], others[:, 1] - old[1])
    dpp = float(np.sum(np.log(d_old)) - np.sum(np.log(d_new))) if len(others) else 0.0
    vb = background_potential(np.vstack((old, newpos)), domain)
    dpb = float(vb[0] - vb[1])
    return dpp + dpb
