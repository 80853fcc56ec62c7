"""Linear statistics, discrepancies, correlation and exponential-moment
estimators, and the log-ramp rigidity test functions.

The central object is a TestFunction: a compactly supported evaluator
carrying its support window and measured derivative seminorms, so downstream
bounds can quote |phi|_k without re-deriving anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import dblquad, quad

from . import smoothstep
from .core import (
    AnnulusWindow,
    DiskDomain,
    DomainError,
    PointConfig,
    RectWindow,
    pts_count,
    radial_seminorm,
    system_domain,
)

QUAD_ABS_TOL = 1e-8


# ---------------------------------------------------------------------------
# test functions


@dataclass
class TestFunction:
    """A compactly supported function with recorded seminorms.

    evaluator maps an (n, 2) array to n values and must vanish outside the
    support window. For radial functions, radial_profile(r) and (optionally)
    radial_derivs(r, order) allow closed-form integrals and exact seminorms.
    """

    evaluator: callable
    support: object
    seminorms: tuple
    radial: bool = False
    radial_profile: callable = None
    radial_derivs: callable = None
    name: str = ""
    _integral_cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, pts):
        return np.asarray(self.evaluator(np.atleast_2d(np.asarray(pts, dtype=float))))

    def integral(self, background=None) -> float:
        """int phi dLeb over the background region (whole plane if None)."""
        key = background
        if key in self._integral_cache:
            return self._integral_cache[key]
        val = self._compute_integral(background)
        self._integral_cache[key] = val
        return val

    def _compute_integral(self, background) -> float:
        sup = self.support
        if self.radial and isinstance(sup, (DiskDomain, AnnulusWindow)):
            cx, cy = sup.center
            r_hi = sup.radius if isinstance(sup, DiskDomain) else sup.r_outer
            lo, hi = 0.0, r_hi
            concentric = False
            if background is None:
                concentric = True
            elif isinstance(background, (DiskDomain, AnnulusWindow)) and np.allclose(
                background.center, sup.center
            ):
                concentric = True
                if isinstance(background, DiskDomain):
                    hi = min(hi, background.radius)
                else:
                    lo, hi = max(lo, background.r_inner), min(hi, background.r_outer)
            if concentric:
                if hi <= lo:
                    return 0.0
                val, _ = quad(
                    lambda r: 2.0 * math.pi * r * float(self.radial_profile(r)),
                    lo,
                    hi,
                    epsabs=QUAD_ABS_TOL,
                    limit=500,
                )
                return val
        # general case: planar quadrature over the support box, restricted to
        # the background region when one is given
        xmin = sup.center[0] - sup.bounding_radius if hasattr(sup, "center") else sup.xmin
        if isinstance(sup, RectWindow):
            xmin, xmax, ymin, ymax = sup.xmin, sup.xmax, sup.ymin, sup.ymax
        else:
            r = sup.bounding_radius
            xmin, xmax, ymin, ymax = -r, r, -r, r

        def f(y, x):
            v = float(self.evaluator(np.array([[x, y]]))[0])
            if background is not None and not background.contains([[x, y]])[0]:
                return 0.0
            return v

        val, _ = dblquad(f, xmin, xmax, ymin, ymax, epsabs=QUAD_ABS_TOL)
        return val

    def measured_seminorm(self, k: int, n_grid: int = 4096) -> float:
        """Grid measurement of |phi|_k; radial functions use exact derivatives."""
        if self.radial and self.radial_derivs is not None:
            sup = self.support
            r_hi = sup.radius if isinstance(sup, DiskDomain) else sup.r_outer
            r = np.linspace(1e-9, r_hi, n_grid)
            return radial_seminorm(
                self.radial_profile(r),
                self.radial_derivs(r, 1),
                self.radial_derivs(r, 2),
                self.radial_derivs(r, 3),
                r,
                k,
            )
        if k == 0:
            r = self.support.bounding_radius
            g = np.linspace(-r, r, int(math.isqrt(n_grid)) * 8)
            xx, yy = np.meshgrid(g, g)
            vals = self(np.column_stack((xx.ravel(), yy.ravel())))
            return float(np.max(np.abs(vals)))
        raise NotImplementedError("grid seminorms beyond k=0 need radial derivatives")


def fluct(phi: TestFunction, config: PointConfig, background=None) -> float:
    """Sum of phi over the points minus the background integral of phi."""
    s = float(np.sum(phi(config.points))) if config.n else 0.0
    return s - phi.integral(background)


def discrepancy(config: PointConfig, window) -> float:
    """Point count minus area."""
    return pts_count(config, window) - window.area


# ---------------------------------------------------------------------------
# named constructions


def ghosh_peres_function(eps: float, ell: float = 1.0, center=(0.0, 0.0)) -> TestFunction:
    """Radial log-ramp: 1 on the disk of radius ell, 0 outside 2*ell*e^(1/eps).

    In the log radial coordinate the descent is a fixed smooth step, so the
    k-th derivative scales like eps / r^k and the Dirichlet energy is O(eps).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if ell < 1.0:
        raise ValueError("ell must be >= 1")
    A = 1.0 / eps + math.log(2.0)  # log-width of the descent region
    ell = float(ell)
    r_out = 2.0 * ell * math.exp(1.0 / eps)
    cx, cy = center

    def profile(r):
        r = np.asarray(r, dtype=float)
        s = np.log(np.maximum(r, 1e-300) / ell) / A
        return 1.0 - smoothstep.value(s)

    def derivs(r, order):
        r = np.asarray(r, dtype=float)
        rs = np.maximum(r, 1e-300)
        s = np.log(rs / ell) / A
        s1 = 1.0 / (A * rs)
        s2 = -1.0 / (A * rs**2)
        s3 = 2.0 / (A * rs**3)
        S1 = smoothstep.derivative(s, 1)
        if order == 1:
            return -S1 * s1
        S2 = smoothstep.derivative(s, 2)
        if order == 2:
            return -(S2 * s1**2 + S1 * s2)
        S3 = smoothstep.derivative(s, 3)
        return -(S3 * s1**3 + 3.0 * S2 * s1 * s2 + S1 * s3)

    def evaluator(pts):
        return profile(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy))

    tf = TestFunction(
        evaluator=evaluator,
        support=DiskDomain(center, r_out),
        seminorms=(),
        radial=True,
        radial_profile=profile,
        radial_derivs=derivs,
        name=f"logramp(eps={eps}, ell={ell})",
    )
    tf.seminorms = tuple(tf.measured_seminorm(k) for k in range(4))
    return tf


def dirichlet_energy(phi: TestFunction) -> float:
    """int |grad phi|^2 over the plane (radial functions only)."""
    if not (phi.radial and phi.radial_derivs is not None):
        raise ValueError("need a radial test function with derivatives")
    sup = phi.support
    r_hi = sup.radius if isinstance(sup, DiskDomain) else sup.r_outer

    def f(r):
        return 2.0 * math.pi * r * float(phi.radial_derivs(r, 1)) ** 2

    val, _ = quad(f, 0.0, r_hi, epsabs=QUAD_ABS_TOL, limit=500)
    return val


def smooth_radial_bump(radius: float, center=(0.0, 0.0), height: float = 1.0) -> TestFunction:
    """1 on the half-radius disk, smooth descent to 0 at the given radius."""
    cx, cy = center
    radius = float(radius)

    def profile(r):
        r = np.asarray(r, dtype=float)
        return height * (1.0 - smoothstep.value(2.0 * r / radius - 1.0))

    def derivs(r, order):
        r = np.asarray(r, dtype=float)
        c = 2.0 / radius
        return -height * smoothstep.derivative(c * r - 1.0, order) * c**order

    def evaluator(pts):
        return profile(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy))

    tf = TestFunction(
        evaluator=evaluator,
        support=DiskDomain(center, radius),
        seminorms=(),
        radial=True,
        radial_profile=profile,
        radial_derivs=derivs,
        name=f"bump(radius={radius})",
    )
    tf.seminorms = tuple(tf.measured_seminorm(k) for k in range(4))
    return tf


def tent_function(radius: float, center=(0.0, 0.0), slope: float = 1.0) -> TestFunction:
    """Radial tent: slope * (radius - r), clipped at 0. Lipschitz constant = slope."""
    cx, cy = center
    radius = float(radius)

    def evaluator(pts):
        r = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)
        return slope * np.maximum(radius - r, 0.0)

    def profile(r):
        return slope * np.maximum(radius - np.asarray(r, dtype=float), 0.0)

    return TestFunction(
        evaluator=evaluator,
        support=DiskDomain(center, radius),
        seminorms=(slope * radius, slope, math.inf, math.inf),
        radial=True,
        radial_profile=profile,
        name=f"tent(radius={radius})",
    )


def lipschitz_dictionary(ell: float, center=(0.0, 0.0), version: int = 1) -> list:
    """Fixed 32-member family of 1-Lipschitz functions supported in D(center, ell).

    Mix of radial tents, radial bumps, and rotated one-dimensional ridges; the
    sup of |Fluct| over this dictionary stands in for a sup over all
    1-Lipschitz functions. Versioned so results can cite the family used.
    """
    if version != 1:
        raise ValueError("unknown dictionary version")
    funcs = []
    cx, cy = center
    for k in range(8):
        funcs.append(tent_function(ell * (k + 1) / 8.0, center))
    for k in range(8):
        radius = ell * (k + 1) / 8.0
        b = smooth_radial_bump(radius, center)
        # rescale to Lipschitz constant 1
        scale = 1.0 / max(b.seminorms[1], 1e-12)
        funcs.append(scale_function(b, scale))
    for k in range(16):
        angle = math.pi * k / 16.0
        ux, uy = math.cos(angle), math.sin(angle)

        def evaluator(pts, ux=ux, uy=uy):
            t = (pts[:, 0] - cx) * ux + (pts[:, 1] - cy) * uy
            r = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)
            ridge = np.maximum(ell / 2.0 - np.abs(t), 0.0)
            return np.where(r <= ell, np.minimum(ridge, ell - r), 0.0)

        funcs.append(
            TestFunction(
                evaluator=evaluator,
                support=DiskDomain(center, ell),
                seminorms=(ell / 2.0, 1.0, math.inf, math.inf),
                radial=False,
                name=f"ridge(angle={angle:.3f})",
            )
        )
    return funcs


def scale_function(phi: TestFunction, a: float) -> TestFunction:
    def evaluator(pts):
        return a * phi.evaluator(pts)

    return TestFunction(
        evaluator=evaluator,
        support=phi.support,
        seminorms=tuple(abs(a) * s for s in phi.seminorms),
        radial=phi.radial,
        radial_profile=(lambda r: a * phi.radial_profile(r)) if phi.radial_profile else None,
        radial_derivs=(lambda r, k: a * phi.radial_derivs(r, k)) if phi.radial_derivs else None,
        name=f"{a}*{phi.name}",
    )


# ---------------------------------------------------------------------------
# estimators


@dataclass
class MomentEstimate:
    mean: float
    variance: float
    count: int
    log_exp_moment: float = None
    confidence_band: tuple = None
    heavy_tail: bool = False

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count)


class EstimationError(RuntimeError):
    pass


def exp_moment(values, scale: float, rng=None, n_boot: int = 200) -> MomentEstimate:
    """log E exp(scale * value) with a bootstrap band and a heavy-tail flag.

    The flag trips when the largest 1% of the exponential summands carries
    more than half the total mass, in which case the point estimate is known
    to be unreliable.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EstimationError("no values")
    n = values.size
    sv = scale * values
    shift = np.max(sv)
    w = np.exp(sv - shift)
    log_mean = shift + math.log(np.mean(w))
    top = max(1, int(math.ceil(0.01 * n)))
    wsorted = np.sort(w)
    heavy = wsorted[-top:].sum() > 0.5 * wsorted.sum()
    if rng is None:
        rng = np.random.default_rng(0)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        boots[b] = shift + math.log(np.mean(w[idx]))
    band = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))
    return MomentEstimate(
        mean=float(values.mean()),
        variance=float(values.var(ddof=1)) if n > 1 else 0.0,
        count=n,
        log_exp_moment=float(log_mean),
        confidence_band=band,
        heavy_tail=bool(heavy),
    )


def correlation_rho_k(samples, k: int, bins) -> list:
    """Histogram estimator of the k-point correlation over window tuples.

    `bins` is a list of windows (k = 1) or of k-tuples of disjoint windows.
    For each bin the estimator counts ordered k-tuples of distinct points
    with the j-th point in the j-th window, divided by the product of areas;
    this is the density of the k-th factorial moment measure.
    """
    if not 1 <= k <= 3:
        raise ValueError("k must be 1, 2 or 3")
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3:
        raise ValueError("samples must be (n_samples, n, 2)")
    if len(samples) < 100:
        raise EstimationError("need at least 100 samples for correlation estimates")
    rows = []
    for bin_spec in bins:
        wins = (bin_spec,) if k == 1 else tuple(bin_spec)
        if len(wins) != k:
            raise ValueError(f"bin needs {k} windows")
        area = float(np.prod([w.area for w in wins]))
        per_sample = np.empty(len(samples))
        for s, pts in enumerate(samples):
            counts = [np.count_nonzero(w.contains(pts)) for w in wins]
            if k == 1:
                tup = counts[0]
            elif k == 2:
                both = np.count_nonzero(wins[0].contains(pts) & wins[1].contains(pts))
                tup = counts[0] * counts[1] - both
            else:
                in_w = [wins[j].contains(pts) for j in range(3)]
                tup = _ordered_triples(in_w)
            per_sample[s] = tup / area
        rows.append(
            {
                "windows": wins,
                "rho": float(per_sample.mean()),
                "se": float(per_sample.std(ddof=1) / math.sqrt(len(samples))),
            }
        )
    return rows


def _ordered_triples(in_w) -> float:
    """Ordered triples of distinct points, one in each of three windows."""
    a, b, c = in_w
    nab = np.count_nonzero(a & b)
    nac = np.count_nonzero(a & c)
    nbc = np.count_nonzero(b & c)
    nabc = np.count_nonzero(a & b & c)
    na, nb, nc = (np.count_nonzero(v) for v in in_w)
    # inclusion-exclusion over coincidence patterns of the index triple
    return (
        na * nb * nc
        - nab * nc
        - nac * nb
        - nbc * na
        + 2 * nabc
    )


def rigidity_variance_scan(samples, eps_list, ell_list, center=(0.0, 0.0)) -> list:
    """Var[Fluct[phi_{eps, ell}]] over a parameter grid, with standard errors."""
    samples = np.asarray(samples, dtype=float)
    n_pts = samples.shape[1]
    R = system_domain(n_pts).radius
    dom = system_domain(n_pts)
    rows = []
    for eps in eps_list:
        for ell in ell_list:
            phi = ghosh_peres_function(eps, ell, center)
            if phi.support.bounding_radius > R:
                raise DomainError(
                    f"support radius {phi.support.bounding_radius:.3g} exceeds "
                    f"system radius {R:.3g}"
                )
            vals = fluct_over_samples(phi, samples, dom)
            var = float(vals.var(ddof=1))
            # standard error of the variance from fourth moments
            m = vals - vals.mean()
            n = len(vals)
            se = math.sqrt(max(np.mean(m**4) - var**2 * (n - 3) / (n - 1), 0.0) / n)
            rows.append(
                {"eps": eps, "ell": ell, "var": var, "se": se,
                 "dirichlet": dirichlet_energy(phi)}
            )
    return rows


def fluct_over_samples(phi: TestFunction, samples, background=None) -> np.ndarray:
    """Vectorized Fluct[phi] over a stack of configurations."""
    samples = np.asarray(samples, dtype=float)
    base = phi.integral(background)
    flat = samples.reshape(-1, 2)
    vals = phi(flat).reshape(samples.shape[0], samples.shape[1])
    return vals.sum(axis=1) - base


def radial_hard_edge_scan(samples, radii) -> list:
    """E|Discr(X, D(0, r))| / r over centered disks, with standard errors."""
    samples = np.asarray(samples, dtype=float)
    r_pts = np.hypot(samples[:, :, 0], samples[:, :, 1])
    rows = []
    for r in radii:
        counts = np.count_nonzero(r_pts <= r, axis=1)
        disc = np.abs(counts - math.pi * r * r) / r
        rows.append(
            {
                "r": r,
                "mean_abs_discrepancy_over_r": float(disc.mean()),
                "se": float(disc.std(ddof=1) / math.sqrt(len(disc))),
            }
        )
    return rows
