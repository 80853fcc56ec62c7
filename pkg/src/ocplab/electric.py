"""Electric formalism: truncated potentials and fields, nearest-neighbor
truncations, the local field energy Ener and the combined gauge EnerPts, the
local-law scan of Ener over growing disks, and the deterministic
fluctuation-bound check.

The global potential is generated by the points minus the uniform unit
background on the system disk; the field of that background is pi x inside
the disk and pi R^2 x / |x|^2 outside. Each point charge is smeared onto the
circle of its truncation radius, which cancels the singularity inside that
circle while leaving the field untouched outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import DiskDomain, PointConfig, pts_count, system_domain

CHUNK = 16384


class SingularFieldError(ValueError):
    """Evaluation exactly at an untruncated point charge."""


class ResolutionError(ValueError):
    """Grid spacing too coarse to resolve the truncation disks."""


def _local_radius(window) -> float:
    """Radius of the window about its own center (not the origin)."""
    if isinstance(window, DiskDomain):
        return window.radius
    if hasattr(window, "r_outer"):
        return window.r_outer
    return 0.5 * math.hypot(window.xmax - window.xmin, window.ymax - window.ymin)


def f_eta(x, eta: float):
    """Truncation profile min(log(|x| / eta), 0); -inf at the origin."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0], x[:, 1])
    with np.errstate(divide="ignore"):
        return np.minimum(np.log(r / eta), 0.0)


def nn_distances(config: PointConfig) -> np.ndarray:
    """Quarter of each point's nearest-neighbor distance, capped at 1/4."""
    n = config.n
    if n == 0:
        return np.empty(0)
    if n == 1:
        return np.array([0.25])
    d = squareform(pdist(config.points))
    np.fill_diagonal(d, np.inf)
    return 0.25 * np.minimum(d.min(axis=1), 1.0)


def nn_distance(config: PointConfig, i: int) -> float:
    if not 0 <= i < config.n:
        raise IndexError(f"point index {i} out of range")
    return float(nn_distances(config)[i])


def _background_gradient(nodes: np.ndarray, radius: float) -> np.ndarray:
    r2 = nodes[:, 0] ** 2 + nodes[:, 1] ** 2
    scale = np.where(r2 <= radius**2, math.pi, math.pi * radius**2 / np.maximum(r2, 1e-300))
    return scale[:, None] * nodes


def truncated_field(config: PointConfig, domain, x, eta=None) -> np.ndarray:
    """Gradient of the truncated potential at the evaluation points x.

    eta is a per-point vector of truncation radii; None selects the
    nearest-neighbor policy. Inside a point's truncation circle the smeared
    charge cancels its own singular field exactly, so only the other charges
    and the background contribute there.
    """
    if not (isinstance(domain, DiskDomain) and domain.center == (0.0, 0.0)):
        raise NotImplementedError("backgrounds are supported on centered disks")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = _background_gradient(x, domain.radius)
    if config.n == 0:
        return out
    pts = config.points
    if eta is None:
        eta = nn_distances(config)
    else:
        eta = np.broadcast_to(np.asarray(eta, dtype=float), (config.n,))
    eta2 = eta**2
    if config.n * len(x) > 200_000:
        from ._kernels import field_point_sum

        singular = field_point_sum(
            np.ascontiguousarray(x), np.ascontiguousarray(pts), eta2, out
        )
        if singular:
            raise SingularFieldError("evaluation at a point with zero truncation")
        return out
    for lo in range(0, len(x), CHUNK):
        nodes = x[lo : lo + CHUNK]
        dx = nodes[:, None, :] - pts[None, :, :]
        d2 = dx[..., 0] ** 2 + dx[..., 1] ** 2
        hit = d2 == 0.0
        if np.any(hit & (eta2[None, :] == 0.0)):
            raise SingularFieldError("evaluation at a point with zero truncation")
        live = d2 >= eta2[None, :]
        d2 = np.where(d2 == 0.0, 1.0, d2)
        contrib = np.where(live[..., None], -dx / d2[..., None], 0.0)
        out[lo : lo + CHUNK] += contrib.sum(axis=1)
    return out


@dataclass
class FieldGrid:
    """Midpoint grid over a window with sampled truncated-field values."""

    window: object
    h: float
    eta: np.ndarray
    nodes: np.ndarray
    values: np.ndarray

    @classmethod
    def build(cls, config, window, domain, h, eta=None):
        r = _local_radius(window)
        cx, cy = window.center
        m = int(math.ceil(2 * r / h))
        g = cx - r + (np.arange(m) + 0.5) * (2 * r / m)
        gy = cy - r + (np.arange(m) + 0.5) * (2 * r / m)
        xx, yy = np.meshgrid(g, gy)
        nodes = np.column_stack((xx.ravel(), yy.ravel()))
        nodes = nodes[window.contains(nodes)]
        if eta is None:
            eta = nn_distances(config)
        vals = truncated_field(config, domain, nodes, eta)
        return cls(window, 2 * r / m, np.asarray(eta, dtype=float), nodes, vals)

    def energy(self) -> float:
        return float(np.sum(self.values**2)) * self.h**2


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    error: float
    h: float


def local_electric_energy(
    config: PointConfig, omega, domain=None, h: float = None, eta=None, n_points=None
) -> EnergyEstimate:
    """Integral of the squared truncated field over the window.

    Midpoint rule at spacings h and h/2 with first-order extrapolation; the
    error field is the difference of the two passes. The spacing must
    resolve the smallest truncation disk meeting the window.
    """
    if domain is None:
        domain = system_domain(n_points if n_points is not None else config.n)
    if eta is None:
        eta = nn_distances(config)
    else:
        eta = np.broadcast_to(np.asarray(eta, dtype=float), (config.n,))
    reach = _local_radius(omega)
    cx, cy = omega.center
    if config.n:
        d_to_center = np.hypot(config.points[:, 0] - cx, config.points[:, 1] - cy)
        near = d_to_center <= reach + eta
        r_min = float(eta[near].min()) if np.any(near) else math.inf
    else:
        r_min = math.inf
    if h is None:
        h = min(r_min / 4.0, reach / 24.0)
    elif h > r_min / 4.0 + 1e-12:
        raise ResolutionError(
            f"spacing {h:.3g} exceeds a quarter of the smallest truncation "
            f"radius {r_min:.3g} in the window"
        )
    coarse = FieldGrid.build(config, omega, domain, h, eta).energy()
    fine = FieldGrid.build(config, omega, domain, h / 2.0, eta).energy()
    return EnergyEstimate(fine + (fine - coarse), abs(fine - coarse), h)


def ener_pts(config: PointConfig, omega, **kwargs) -> float:
    """|Omega|^(1/2) Ener^(1/2) + point count, the combined local gauge."""
    est = local_electric_energy(config, omega, **kwargs)
    return math.sqrt(omega.area) * math.sqrt(max(est.value, 0.0)) + pts_count(
        config, omega
    )


# ---------------------------------------------------------------------------
# divergence identity


def divergence_residual(config, domain, window, h, eta=None, n_circle=4096) -> float:
    """L1 residual of the discrete divergence identity over the window.

    The divergence of the truncated field is 2 pi times the smeared point
    charges minus the background indicator. The smeared charges are binned
    as uniform atoms on their truncation circles; the residual integrates
    the mismatch over grid cells and shrinks like h under refinement.
    """
    if eta is None:
        eta = nn_distances(config)
    else:
        eta = np.broadcast_to(np.asarray(eta, dtype=float), (config.n,))
    r = _local_radius(window)
    cx, cy = window.center
    m = int(math.ceil(2 * r / h))
    h = 2 * r / m
    edges_x = cx - r + np.arange(m + 1) * h
    edges_y = cy - r + np.arange(m + 1) * h
    mid_x = 0.5 * (edges_x[:-1] + edges_x[1:])
    mid_y = 0.5 * (edges_y[:-1] + edges_y[1:])

    # net flux through each cell boundary; the edge integrals use a number
    # of sub-points growing like 1/h so that edges crossed by truncation
    # circles are resolved and the residual decays with the cell size
    s = max(2, int(round(0.4 / h)))
    frac = (np.arange(s) + 0.5) * h / s

    sub_y = (edges_y[:-1, None] + frac[None, :]).ravel()  # (m*s,)
    ex_grid = np.broadcast_to(edges_x[:, None], (m + 1, m * s))
    ey_grid = np.broadcast_to(sub_y[None, :], (m + 1, m * s))
    v_nodes = np.column_stack((ex_grid.ravel(), ey_grid.ravel()))
    fx = truncated_field(config, domain, v_nodes, eta)[:, 0]
    fx = fx.reshape(m + 1, m, s).mean(axis=2)  # [x-edge, row]
    flux_x = (fx[1:, :] - fx[:-1, :]).T * h  # [row, col]

    sub_x = (edges_x[:-1, None] + frac[None, :]).ravel()
    hx_grid = np.broadcast_to(sub_x[None, :], (m + 1, m * s))
    hy_grid = np.broadcast_to(edges_y[:, None], (m + 1, m * s))
    h_nodes = np.column_stack((hx_grid.ravel(), hy_grid.ravel()))
    fy = truncated_field(config, domain, h_nodes, eta)[:, 1]
    fy = fy.reshape(m + 1, m, s).mean(axis=2)  # [y-edge, col]
    flux_y = (fy[1:, :] - fy[:-1, :]) * h  # [row, col]
    flux = flux_x + flux_y

    charge = np.zeros((m, m))
    th = 2 * math.pi * (np.arange(n_circle) + 0.5) / n_circle
    for k in range(config.n):
        px, py = config.points[k]
        ax = px + eta[k] * np.cos(th)
        ay = py + eta[k] * np.sin(th)
        ix = np.floor((ax - (cx - r)) / h).astype(int)
        iy = np.floor((ay - (cy - r)) / h).astype(int)
        ok = (ix >= 0) & (ix < m) & (iy >= 0) & (iy < m)
        np.add.at(charge, (iy[ok], ix[ok]), 1.0 / n_circle)
    xx, yy = np.meshgrid(mid_x, mid_y)
    centers = np.column_stack((xx.ravel(), yy.ravel()))
    inside = domain.contains(centers).reshape(m, m)
    # the potential is -log * (charges - background), so its Laplacian is
    # -2 pi times that signed density; per-cell masses on the right
    rhs = -2 * math.pi * (charge - inside.astype(float) * h**2)
    return float(np.sum(np.abs(flux - rhs)))


# ---------------------------------------------------------------------------
# scans and bounds


def local_law_scan(
    samples,
    centers,
    ells,
    n_points: int,
    h: float = None,
    eta=None,
    margin_frac: float = 0.1,
) -> list:
    """Per-scale table of Ener(X, D(c, ell)) / ell^2 over samples and centers."""
    R = system_domain(n_points).radius
    margin = margin_frac * math.sqrt(n_points)
    for c in centers:
        for ell in ells:
            if math.hypot(*c) + ell > R - margin:
                raise ValueError(
                    f"window D(({c[0]:.3g},{c[1]:.3g}), {ell:.3g}) leaves the bulk"
                )
    rows = []
    for ell in ells:
        vals = []
        for pts in samples:
            cfg = PointConfig(pts)
            for c in centers:
                est = local_electric_energy(
                    cfg, DiskDomain(tuple(c), ell), h=h, eta=eta, n_points=n_points
                )
                vals.append(est.value / ell**2)
        vals = np.asarray(vals)
        rows.append(
            {
                "ell": float(ell),
                "mean": float(vals.mean()),
                "se": float(vals.std(ddof=1) / math.sqrt(len(vals)))
                if len(vals) > 1
                else 0.0,
                "q25": float(np.quantile(vals, 0.25)),
                "q75": float(np.quantile(vals, 0.75)),
                "count": len(vals),
            }
        )
    means = [r["mean"] for r in rows]
    flat = max(means) <= 1.3 * min(means)
    for r in rows:
        r["growth_flag"] = not flat
    return rows


def scan_csv(rows) -> str:
    keys = list(rows[0].keys())
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(str(r[k]) for k in keys))
    return "\n".join(lines) + "\n"


def apriori_bound_check(
    config: PointConfig, phi, omega, n_points: int, h: float = None, eta=None
) -> float:
    """Ratio |Fluct[phi]| / (|phi|_1 * EnerPts(X, Omega)).

    The window must contain the 1-neighborhood of the support of phi; the
    invariant suite asserts a uniform ceiling on this ratio over random
    configs and dictionary functions.
    """
    from .observables import fluct

    sup = phi.support
    off = math.hypot(
        sup.center[0] - omega.center[0], sup.center[1] - omega.center[1]
    )
    if off + _local_radius(sup) + 1.0 > _local_radius(omega) + 1e-9:
        raise ValueError("window must contain the 1-neighborhood of the support")
    phi1 = phi.seminorms[1]
    if not math.isfinite(phi1) or phi1 < 0:
        raise ValueError("phi needs a finite first seminorm")
    if phi1 == 0.0:
        return 0.0
    denom = phi1 * ener_pts(config, omega, h=h, eta=eta, n_points=n_points)
    return abs(fluct(phi, config)) / denom


def apriori_scan(
    configs, phis, omega, n_points: int, h: float = None, eta=None
) -> dict:
    """Max and distribution of the bound ratio over config/function pairs."""
    ratios = [
        apriori_bound_check(cfg, phi, omega, n_points, h=h, eta=eta)
        for cfg in configs
        for phi in phis
    ]
    ratios = np.asarray(ratios)
    return {
        "max_ratio": float(ratios.max()),
        "mean_ratio": float(ratios.mean()),
        "count": len(ratios),
    }
