"""Partial move functions: the energy cost of swapping the interior of a
window while holding the exterior fixed, truncated to dyadic layers.

Layer i of the partial move couples an interior point x to the exterior
through the kernel

    phi_{i,x}(y) = (-log|x-y| + log|y|) * chi_i(y)

and the level-p partial move sums Fluct[phi_{i,x} restricted outside the
window] over i <= p and x in the replacement configuration. The +log|y|
counter-term (all reference charge at the origin) is what makes each layer
finite. Two evaluation routes are provided:

* a layer-by-layer route with per-layer quadrature (diagnostics, oracles);
* a collapsed route (MoveKernel) using the telescoped cutoff sum_{i<=p} chi_i
  and a splined background potential, cheap enough to drive inner MCMC.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.interpolate import CubicSpline

from .core import (
    AnnulusWindow,
    DiskDomain,
    DyadicPartition,
    PointConfig,
    RectWindow,
    build_dyadic_partition,
    system_domain,
)
from .observables import TestFunction

LAYER_TOL = 1e-8


class CoverageError(RuntimeError):
    """The exterior data does not extend far enough for the requested level."""


class CanonicalConstraintError(ValueError):
    """Interior point counts of the two configurations differ."""


# ---------------------------------------------------------------------------
# layer kernels


def phi_ix(i: int, x, partition: DyadicPartition = None) -> TestFunction:
    """The layer-i kernel y -> (-log|x-y| + log|y|) chi_i(y)."""
    if partition is None:
        partition = build_dyadic_partition()
    x = np.asarray(x, dtype=float)
    lo, hi = partition.support(i)
    support = DiskDomain((0.0, 0.0), hi) if i == 0 else AnnulusWindow((0.0, 0.0), lo, hi)

    def evaluator(pts):
        r = np.maximum(np.hypot(pts[:, 0], pts[:, 1]), 1e-300)
        d = np.maximum(np.hypot(pts[:, 0] - x[0], pts[:, 1] - x[1]), 1e-300)
        return (np.log(r) - np.log(d)) * partition.chi_radial(i, r)

    return TestFunction(
        evaluator=evaluator,
        support=support,
        seminorms=(),
        radial=False,
        name=f"phi(layer={i}, x=({x[0]:.3g},{x[1]:.3g}))",
    )


def taylor_split(i: int, x, partition: DyadicPartition = None, lam=None):
    """First-order split phi_{i,x} = <x, J_i> + Rem_i on a far layer.

    J_i(y) = (y/|y|^2) chi_i(y) is the x-independent dipole field; the
    remainder picks up the quadratic-and-beyond terms. Requires the layer to
    be disjoint from the window when one is given.
    """
    if partition is None:
        partition = build_dyadic_partition()
    lo, hi = partition.support(i)
    if lam is not None and lam.bounding_radius >= lo:
        raise ValueError(
            f"layer {i} (inner radius {lo}) overlaps the window "
            f"(bounding radius {lam.bounding_radius})"
        )
    x = np.asarray(x, dtype=float)
    support = DiskDomain((0.0, 0.0), hi) if i == 0 else AnnulusWindow((0.0, 0.0), lo, hi)

    def j_field(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = np.maximum(pts[:, 0] ** 2 + pts[:, 1] ** 2, 1e-300)
        chi = partition.chi_radial(i, np.sqrt(r2))
        return pts * (chi / r2)[:, None]

    def linear_evaluator(pts):
        return j_field(pts) @ x

    phi = phi_ix(i, x, partition)

    def rem_evaluator(pts):
        return phi.evaluator(np.atleast_2d(np.asarray(pts, dtype=float))) - linear_evaluator(
            np.atleast_2d(np.asarray(pts, dtype=float))
        )

    linear = TestFunction(
        evaluator=linear_evaluator,
        support=support,
        seminorms=(),
        name=f"<x, J_{i}>",
    )
    rem = TestFunction(
        evaluator=rem_evaluator,
        support=support,
        seminorms=(),
        name=f"Rem(layer={i})",
    )
    linear.j_field = j_field
    return linear, rem


def measured_layer_constants(i: int, x, partition=None, n_grid: int = 400) -> dict:
    """Grid-measured size and gradient constants for J_i and Rem_i on layer i.

    Reported in rescaled form: |J_i|_k * 2^{i(k+1)} and |Rem_i|_k * 2^{i(k+2)}
    for k in {0, 1}, which should be bounded uniformly in i.
    """
    if partition is None:
        partition = build_dyadic_partition()
    linear, rem = taylor_split(i, x, partition)
    lo, hi = partition.support(i)
    r = np.linspace(lo, hi, n_grid)
    th = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    rr, tt = np.meshgrid(r, th)
    pts = np.column_stack((rr.ravel() * np.cos(tt.ravel()), rr.ravel() * np.sin(tt.ravel())))
    h = 2.0**i * 1e-5
    out = {}
    for name, f in (("J", lambda p: linear.j_field(p)[:, 0]),
                    ("J2", lambda p: linear.j_field(p)[:, 1]),
                    ("Rem", lambda p: rem(p))):
        v = np.asarray(f(pts))
        gx = (np.asarray(f(pts + [h, 0.0])) - np.asarray(f(pts - [h, 0.0]))) / (2 * h)
        gy = (np.asarray(f(pts + [0.0, h])) - np.asarray(f(pts - [0.0, h]))) / (2 * h)
        out[name] = (float(np.max(np.abs(v))), float(np.max(np.hypot(gx, gy))))
    scale = 2.0**i
    return {
        "J0": max(out["J"][0], out["J2"][0]) * scale,
        "J1": max(out["J"][1], out["J2"][1]) * scale**2,
        "Rem0": out["Rem"][0] * scale**2,
        "Rem1": out["Rem"][1] * scale**3,
    }


# ---------------------------------------------------------------------------
# background integrals


def _ray_exit_distance(x, u, lam) -> float:
    """Distance from x (inside lam) to the boundary of lam along direction u."""
    if isinstance(lam, DiskDomain):
        cx = x[0] - lam.center[0]
        cy = x[1] - lam.center[1]
        b = cx * u[0] + cy * u[1]
        d2 = cx * cx + cy * cy
        return -b + math.sqrt(max(b * b + lam.radius**2 - d2, 0.0))
    if isinstance(lam, RectWindow):
        t = math.inf
        if u[0] > 0:
            t = min(t, (lam.xmax - x[0]) / u[0])
        elif u[0] < 0:
            t = min(t, (lam.xmin - x[0]) / u[0])
        if u[1] > 0:
            t = min(t, (lam.ymax - x[1]) / u[1])
        elif u[1] < 0:
            t = min(t, (lam.ymin - x[1]) / u[1])
        return t
    raise TypeError("ray exit only implemented for disk and rectangle windows")


def _window_layer_integral(i, x, lam, partition, tol) -> float:
    """int_lam phi_{i,x}(y) dy in polar coordinates centered at x.

    The log singularity at y = x becomes s*log(s) -> 0, so the integrand is
    continuous; the radial limit follows the window boundary exactly.
    """
    lo, hi = partition.support(i)
    if lam.bounding_radius < lo:
        return 0.0
    x = np.asarray(x, dtype=float)

    def integrand(s, alpha):
        u = (math.cos(alpha), math.sin(alpha))
        yx = x[0] + s * u[0]
        yy = x[1] + s * u[1]
        r = max(math.hypot(yx, yy), 1e-300)
        chi = float(partition.chi_radial(i, r))
        if chi == 0.0 or s == 0.0:
            return 0.0
        return s * (math.log(r) - math.log(s)) * chi

    def smax(alpha):
        return _ray_exit_distance(x, (math.cos(alpha), math.sin(alpha)), lam)

    val, _ = dblquad(integrand, 0.0, 2 * math.pi, 0.0, smax, epsabs=tol)
    return val


def layer_background(i, x, lam, partition, r_cap=None) -> float:
    """int over (complement of lam, capped at radius r_cap) of phi_{i,x}.

    The full-plane part collapses by the circle average of -log|x-y|
    (= -log max(|x|, r)), leaving a 1D radial integral that vanishes for
    r >= |x|; the window part is subtracted by 2D quadrature.

    For an origin-centered disk window the exterior region is a union of
    complete circles of radius r > |x|, on each of which the angular average
    of the kernel is exactly zero, so the whole term vanishes.
    """
    if isinstance(lam, DiskDomain) and lam.center == (0.0, 0.0):
        # capped exterior either is empty or consists of complete circles
        # strictly outside |x|, where the angular average vanishes
        if (r_cap is not None and r_cap <= lam.radius) or math.hypot(
            x[0], x[1]
        ) <= lam.radius:
            return 0.0
    tol = LAYER_TOL * 2.0 ** (-i)
    lo, hi = partition.support(i)
    x = np.asarray(x, dtype=float)
    xr = math.hypot(x[0], x[1])
    hi_eff = min(hi, r_cap) if r_cap is not None else hi
    top = min(hi_eff, xr)
    full = 0.0
    if top > lo and xr > 0:
        f = lambda r: 2 * math.pi * r * math.log(r / xr) * float(partition.chi_radial(i, r))
        full, _ = quad(f, lo, top, epsabs=tol, limit=200)
    return full - _window_layer_integral(i, x, lam, partition, tol)


# ---------------------------------------------------------------------------
# layered evaluation


def _check_coverage(p, coverage_radius, r_cap):
    needed = 2.0 ** (p + 1)
    if r_cap is not None:
        needed = min(needed, r_cap)
    if coverage_radius + 1e-9 < needed:
        raise CoverageError(
            f"exterior data extends to radius {coverage_radius:.3g} but level "
            f"p needs {needed:.3g}"
        )


def _exterior_points(config: PointConfig, lam, r_cap):
    pts = config.points
    mask = ~lam.contains(pts)
    if r_cap is not None:
        mask &= np.hypot(pts[:, 0], pts[:, 1]) <= r_cap * (1 + 1e-12)
    return pts[mask]


def layer_term(i, interior_pts, ext_pts, lam, partition, r_cap=None) -> float:
    """Layer-i contribution: point sums minus the background integral."""
    lo, hi = partition.support(i)
    if r_cap is not None and lo >= r_cap:
        return 0.0
    total = 0.0
    if len(ext_pts):
        r = np.maximum(np.hypot(ext_pts[:, 0], ext_pts[:, 1]), 1e-300)
        chi = partition.chi_radial(i, r)
        live = chi != 0.0
        ylive = ext_pts[live]
        chilive = chi[live]
        logr = np.log(r[live])
    else:
        ylive = np.empty((0, 2))
        chilive = logr = np.empty(0)
    for x in np.atleast_2d(interior_pts):
        if len(ylive):
            d = np.maximum(
                np.hypot(ylive[:, 0] - x[0], ylive[:, 1] - x[1]), 1e-300
            )
            total += float(np.sum((logr - np.log(d)) * chilive))
        total -= layer_background(i, x, lam, partition, r_cap)
    return total


def partial_move_tilde(
    xprime: PointConfig,
    config: PointConfig,
    lam,
    p: int,
    n_points: int = None,
    partition: DyadicPartition = None,
    coverage_radius: float = None,
    per_layer: bool = False,
    origin=(0.0, 0.0),
):
    """Level-p partial move of X' against the exterior of `config`.

    n_points switches on the finite-system form: both exterior points and
    background are capped at the radius of the system disk for n_points
    charges. coverage_radius defaults to that radius (finite) or to the
    farthest exterior point (infinite data). `origin` recenters the whole
    layer system (cutoffs, counter-term, cap) at another point, which makes
    the construction exactly translation-equivariant.
    """
    if partition is None:
        partition = build_dyadic_partition()
    if origin != (0.0, 0.0):
        from .core import local_view, translate_window

        u = (-float(origin[0]), -float(origin[1]))
        return partial_move_tilde(
            local_view(xprime, origin) if xprime.n else xprime,
            local_view(config, origin),
            translate_window(lam, u),
            p,
            n_points,
            partition,
            coverage_radius,
            per_layer,
        )
    if xprime.n and not np.all(lam.contains(xprime.points)):
        raise ValueError("replacement configuration must lie inside the window")
    r_cap = system_domain(n_points).radius if n_points is not None else None
    ext = _exterior_points(config, lam, r_cap)
    if coverage_radius is None:
        if r_cap is not None:
            coverage_radius = r_cap
        else:
            coverage_radius = float(np.hypot(ext[:, 0], ext[:, 1]).max()) if len(ext) else math.inf
    _check_coverage(p, coverage_radius, r_cap)
    layers = []
    for i in range(p + 1):
        if xprime.n == 0:
            layers.append(0.0)
            continue
        layers.append(layer_term(i, xprime.points, ext, lam, partition, r_cap))
    total = float(sum(layers))
    return (total, layers) if per_layer else total


def partial_move(
    xprime: PointConfig,
    config: PointConfig,
    lam,
    p: int,
    n_points: int = None,
    partition: DyadicPartition = None,
    coverage_radius: float = None,
    origin=(0.0, 0.0),
) -> float:
    """M at level p: cost of replacing the interior of the window by X'."""
    x_lam = config.restrict(lam)
    if xprime.n != x_lam.n:
        raise CanonicalConstraintError(
            f"replacement has {xprime.n} points but the window holds {x_lam.n}"
        )
    a = partial_move_tilde(
        xprime, config, lam, p, n_points, partition, coverage_radius, origin=origin
    )
    b = partial_move_tilde(
        x_lam, config, lam, p, n_points, partition, coverage_radius, origin=origin
    )
    return a - b


def partial_move_direct(
    xprime: PointConfig,
    config: PointConfig,
    lam,
    p: int,
    n_points: int = None,
    partition: DyadicPartition = None,
) -> float:
    """Same quantity evaluated against the signed measure X' - X_window.

    One pass per layer with +/- weights instead of a difference of two
    partial sums; used as a cross-check of the definition.
    """
    if partition is None:
        partition = build_dyadic_partition()
    x_lam = config.restrict(lam)
    if xprime.n != x_lam.n:
        raise CanonicalConstraintError("interior point counts differ")
    r_cap = system_domain(n_points).radius if n_points is not None else None
    ext = _exterior_points(config, lam, r_cap)
    total = 0.0
    for i in range(p + 1):
        total += layer_term(i, xprime.points, ext, lam, partition, r_cap)
        total -= layer_term(i, x_lam.points, ext, lam, partition, r_cap)
    return total


# ---------------------------------------------------------------------------
# convergence diagnostics


@dataclass
class MoveEval:
    lam: object
    p_values: list
    tilde_values: list
    move_values: list
    layer_contributions: list
    increments: list
    converged: bool
    tolerance: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "p_values": list(self.p_values),
                "tilde_values": [float(v) for v in self.tilde_values],
                "move_values": [float(v) for v in self.move_values],
                "layer_contributions": [float(v) for v in self.layer_contributions],
                "increments": [float(v) for v in self.increments],
                "converged": bool(self.converged),
                "tolerance": self.tolerance,
            }
        )


def convergence_diagnostic(
    xprime: PointConfig,
    config: PointConfig,
    lam,
    p_max: int,
    n_points: int = None,
    partition: DyadicPartition = None,
    tolerance: float = 1e-3,
    coverage_radius: float = None,
) -> MoveEval:
    """Layer-resolved move values for p = 0..p_max with a Cauchy verdict.

    Convergence is declared when the largest of the last three increments
    |M^{p+1} - M^p| falls below the tolerance. A configuration for which the
    increments do not decay yields converged=False, not an error: the limit
    statement is almost-sure, not universal.
    """
    if partition is None:
        partition = build_dyadic_partition()
    r_cap = system_domain(n_points).radius if n_points is not None else None
    ext = _exterior_points(config, lam, r_cap)
    x_lam = config.restrict(lam)
    if xprime.n != x_lam.n:
        raise CanonicalConstraintError("interior point counts differ")
    if coverage_radius is None:
        if r_cap is not None:
            coverage_radius = r_cap
        else:
            coverage_radius = float(np.hypot(ext[:, 0], ext[:, 1]).max()) if len(ext) else math.inf
    _check_coverage(p_max, coverage_radius, r_cap)
    layer_vals = []
    for i in range(p_max + 1):
        a = layer_term(i, xprime.points, ext, lam, partition, r_cap)
        b = layer_term(i, x_lam.points, ext, lam, partition, r_cap)
        layer_vals.append(a - b)
    move_values = list(np.cumsum(layer_vals))
    tilde_layers = []
    tilde_total = 0.0
    tilde_values = []
    for i in range(p_max + 1):
        t = layer_term(i, xprime.points, ext, lam, partition, r_cap)
        tilde_layers.append(t)
        tilde_total += t
        tilde_values.append(tilde_total)
    increments = [abs(move_values[k + 1] - move_values[k]) for k in range(p_max)]
    tail = increments[-3:] if len(increments) >= 3 else increments
    converged = bool(tail) and max(tail) < tolerance
    return MoveEval(
        lam=lam,
        p_values=list(range(p_max + 1)),
        tilde_values=tilde_values,
        move_values=move_values,
        layer_contributions=layer_vals,
        increments=increments,
        converged=converged,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# collapsed fast path


class MoveKernel:
    """Fast evaluator of the level-p partial move for a fixed window.

    Collapses the layer sum with theta_p = sum_{i<=p} chi_i and splits the
    value into an exterior point sum (O(n_ext) per interior point) and a
    background potential B_p depending only on (window, p, system size),
    which is precomputed on a grid and splined. Intended to drive inner MCMC
    chains where the exterior is frozen.
    """

    def __init__(self, lam, p, n_points=None, partition=None, n_grid=400):
        if partition is None:
            partition = build_dyadic_partition()
        self.lam = lam
        self.p = p
        self.n_points = n_points
        self.partition = partition
        self.r_cap = system_domain(n_points).radius if n_points is not None else None
        if not (isinstance(lam, DiskDomain) and np.allclose(lam.center, (0.0, 0.0))):
            raise NotImplementedError(
                "the fast path currently supports origin-centered disk windows"
            )
        # B_p(x) = sum_{i<=p} layer background; radial for a centered disk
        radii = np.linspace(0.0, lam.radius, n_grid)
        vals = np.empty(n_grid)
        for k, r in enumerate(radii):
            x = (r, 0.0)
            vals[k] = sum(
                layer_background(i, x, lam, partition, self.r_cap)
                for i in range(p + 1)
            )
        self._bspline = CubicSpline(radii, vals)

    def set_exterior(self, config: PointConfig, coverage_radius=None):
        ext = _exterior_points(config, self.lam, self.r_cap)
        if coverage_radius is None:
            if self.r_cap is not None:
                coverage_radius = self.r_cap
            else:
                coverage_radius = (
                    float(np.hypot(ext[:, 0], ext[:, 1]).max()) if len(ext) else math.inf
                )
        _check_coverage(self.p, coverage_radius, self.r_cap)
        r = np.maximum(np.hypot(ext[:, 0], ext[:, 1]), 1e-300)
        w = self.partition.sum_upto(self.p, r)
        live = w != 0.0
        self._ext = ext[live]
        self._w = w[live]
        self._const = float(np.sum(self._w * np.log(r[live])))

    def point_value(self, x) -> float:
        """U_p(x): exterior point sum minus the splined background, per point."""
        x = np.asarray(x, dtype=float)
        if len(self._ext):
            d = np.maximum(
                np.hypot(self._ext[:, 0] - x[0], self._ext[:, 1] - x[1]), 1e-300
            )
            s = self._const - float(np.sum(self._w * np.log(d)))
        else:
            s = 0.0
        return s - float(self._bspline(math.hypot(x[0], x[1])))

    def m_tilde(self, xprime: PointConfig) -> float:
        return float(sum(self.point_value(x) for x in xprime.points))

    def move(self, xprime: PointConfig, x_lam: PointConfig) -> float:
        if xprime.n != x_lam.n:
            raise CanonicalConstraintError("interior point counts differ")
        return self.m_tilde(xprime) - self.m_tilde(x_lam)
