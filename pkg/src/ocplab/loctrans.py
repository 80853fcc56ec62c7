"""Localized translations: area-preserving maps that rigidly shift a disk of
radius L and are the identity outside the 2L box, built as the time-one flow
of a compactly supported Hamiltonian field. Includes the averaged energy
shifts Diff1/Diff2 over the window D(10L) and the statistical
translation-invariance test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp, norm

from . import smoothstep
from .core import DiskDomain, PointConfig, local_view, system_domain
from .dlr import bonferroni_threshold
from .energy import local_energy
from .movefn import MoveKernel


# ---------------------------------------------------------------------------
# profiles and the field


def plateau(t):
    """1 on [-1, 1], smooth descent to 0 at |t| = 2."""
    t = np.asarray(t, dtype=float)
    return 1.0 - smoothstep.value(np.abs(t) - 1.0)


def plateau_d(t, order=1):
    t = np.asarray(t, dtype=float)
    s = np.sign(t)
    return -smoothstep.derivative(np.abs(t) - 1.0, order) * s**order


def ramp(t):
    """Odd profile equal to t on [-1, 1] and 0 off [-2, 2].

    A plain antiderivative of the plateau would saturate at a nonzero
    constant and leak field outside the box; multiplying by the descending
    step brings it back to zero while keeping the inner slope exactly 1.
    """
    t = np.asarray(t, dtype=float)
    return t * (1.0 - smoothstep.value(np.abs(t) - 1.0))


def ramp_d(t):
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    return (1.0 - smoothstep.value(a - 1.0)) - a * smoothstep.derivative(a - 1.0, 1)


def _field_unit(pts):
    """The generator in the frame where the shift direction is +x."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x1, x2 = pts[:, 0], pts[:, 1]
    return np.column_stack(
        (plateau(x1) * ramp_d(x2), -plateau_d(x1, 1) * ramp(x2))
    )


def hamiltonian_field(x, L: float, v=(1.0, 0.0)):
    """Divergence-free field whose time-one flow shifts D(L) by v.

    The stream function is h1(x1) h2(x2) in the rotated frame; the field is
    its perpendicular gradient, scaled by |v|.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.asarray(v, dtype=float)
    speed = math.hypot(v[0], v[1])
    if speed == 0.0:
        return np.zeros_like(x)
    if speed > 1.0 + 1e-12:
        raise ValueError("the shift vector must have norm at most 1")
    c, s = v[0] / speed, v[1] / speed
    rot = np.array([[c, -s], [s, c]])
    u = (x @ rot) / L  # rotate into the frame, then rescale
    return speed * (_field_unit(u) @ rot.T)


def flow_map(x, t: float, L: float, v=(1.0, 0.0), n_steps: int = 64):
    """Fixed-step 4th-order integration of the flow from 0 to t."""
    if not -1.0 <= t <= 1.0:
        raise ValueError("t must lie in [-1, 1]")
    x = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    h = t / n_steps
    if h == 0.0:
        return x
    for _ in range(n_steps):
        k1 = hamiltonian_field(x, L, v)
        k2 = hamiltonian_field(x + 0.5 * h * k1, L, v)
        k3 = hamiltonian_field(x + 0.5 * h * k2, L, v)
        k4 = hamiltonian_field(x + h * k3, L, v)
        x += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


@dataclass(frozen=True)
class LocalizedTranslation:
    L: float
    v: tuple = (1.0, 0.0)
    n_steps: int = 64

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if math.hypot(*self.v) > 1.0 + 1e-12:
            raise ValueError("|v| must be at most 1")

    def forward(self, x):
        return flow_map(x, 1.0, self.L, self.v, self.n_steps)

    def backward(self, x):
        return flow_map(x, -1.0, self.L, self.v, self.n_steps)

    def psi_plus(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.forward(x) - x

    def psi_minus(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.backward(x) - x

    def rem(self, x):
        return self.psi_plus(x) + self.psi_minus(x)


def _fd_seminorms(f, pts, h, orders=3):
    """Max directional finite differences of a vector map up to third order."""
    out = {}
    vals = {0: np.max(np.hypot(*f(pts).T))}
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    gx = (f(pts + ex) - f(pts - ex)) / (2 * h)
    gy = (f(pts + ey) - f(pts - ey)) / (2 * h)
    vals[1] = max(np.max(np.abs(gx)), np.max(np.abs(gy)))
    gxx = (f(pts + ex) - 2 * f(pts) + f(pts - ex)) / h**2
    gyy = (f(pts + ey) - 2 * f(pts) + f(pts - ey)) / h**2
    gxy = (
        f(pts + ex + ey) - f(pts + ex - ey) - f(pts - ex + ey) + f(pts - ex - ey)
    ) / (4 * h**2)
    vals[2] = max(np.max(np.abs(g)) for g in (gxx, gyy, gxy))
    gxxx = (
        f(pts + 2 * ex) - 2 * f(pts + ex) + 2 * f(pts - ex) - f(pts - 2 * ex)
    ) / (2 * h**3)
    gyyy = (
        f(pts + 2 * ey) - 2 * f(pts + ey) + 2 * f(pts - ey) - f(pts - 2 * ey)
    ) / (2 * h**3)
    vals[3] = max(np.max(np.abs(gxxx)), np.max(np.abs(gyyy)))
    for k in range(orders + 1):
        out[k] = float(vals[k])
    return out


def verify_translation(trans: LocalizedTranslation, grid_n: int = 48) -> dict:
    """Grid certification: rescaled seminorms, Jacobians, inverse composition.

    Reports |psi+-|_k L^k (k = 0..3), |Rem|_k L^{k+1} (k = 0..2), the worst
    Jacobian determinant deviation of both maps, and the worst
    T+(T-(x)) - x error, all over a grid covering the support box.
    """
    L = trans.L
    g = np.linspace(-2.2 * L, 2.2 * L, grid_n)
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack((xx.ravel(), yy.ravel()))
    h = 0.02 * L
    psi_p = _fd_seminorms(trans.psi_plus, pts, h)
    psi_m = _fd_seminorms(trans.psi_minus, pts, h)
    rem = _fd_seminorms(trans.rem, pts, h, orders=2)
    hj = 1e-4 * L
    worst_det = 0.0
    for f in (trans.forward, trans.backward):
        ex = np.array([hj, 0.0])
        ey = np.array([0.0, hj])
        jx = (f(pts + ex) - f(pts - ex)) / (2 * hj)
        jy = (f(pts + ey) - f(pts - ey)) / (2 * hj)
        det = jx[:, 0] * jy[:, 1] - jx[:, 1] * jy[:, 0]
        worst_det = max(worst_det, float(np.max(np.abs(det - 1.0))))
    comp = trans.forward(trans.backward(pts)) - pts
    inv_err = float(np.max(np.hypot(comp[:, 0], comp[:, 1])))
    return {
        "L": L,
        "v": list(trans.v),
        "psi_plus": {k: psi_p[k] * L**k for k in psi_p},
        "psi_minus": {k: psi_m[k] * L**k for k in psi_m},
        "rem": {k: rem[k] * L ** (k + 1) for k in rem},
        "jacobian_det_max_dev": worst_det,
        "inverse_composition_max_err": inv_err,
    }


# ---------------------------------------------------------------------------
# energy shifts


def diff_window(L: float) -> DiskDomain:
    return DiskDomain((0.0, 0.0), 10.0 * L)


def diff1(config: PointConfig, L: float, v=(1.0, 0.0), n_steps: int = 64) -> float:
    """Averaged local-energy shift under the forward and backward maps."""
    lam = diff_window(L)
    trans = LocalizedTranslation(L, tuple(v), n_steps)
    x_lam = config.restrict(lam)
    if x_lam.n == 0:
        return 0.0
    base = local_energy(x_lam, lam, check=False)
    plus = PointConfig(trans.forward(x_lam.points))
    minus = PointConfig(trans.backward(x_lam.points))
    # the maps fix the window setwise, so the counts cannot change
    assert plus.restrict(lam).n == x_lam.n and minus.restrict(lam).n == x_lam.n
    e_p = local_energy(plus, lam, check=False)
    e_m = local_energy(minus, lam, check=False)
    return 0.5 * (e_p.total + e_m.total) - base.total


def diff2(
    config: PointConfig,
    L: float,
    p: int,
    v=(1.0, 0.0),
    n_points: int = None,
    n_steps: int = 64,
    kernel: MoveKernel = None,
) -> float:
    """Averaged level-p move cost of applying the maps to the window interior."""
    lam = diff_window(L)
    trans = LocalizedTranslation(L, tuple(v), n_steps)
    x_lam = config.restrict(lam)
    if x_lam.n == 0:
        return 0.0
    if kernel is None:
        kernel = MoveKernel(lam, p, n_points=n_points)
    kernel.set_exterior(config)
    plus = PointConfig(trans.forward(x_lam.points))
    minus = PointConfig(trans.backward(x_lam.points))
    return 0.5 * (kernel.move(plus, x_lam) + kernel.move(minus, x_lam))


def diff1_tameness_constant(configs, L: float, v=(1.0, 0.0)) -> float:
    """Max of |Diff1| * L / (|window|^2 + Pts^2) over the given configs."""
    lam = diff_window(L)
    worst = 0.0
    for cfg in configs:
        n_in = cfg.restrict(lam).n
        denom = lam.area**2 + n_in**2
        worst = max(worst, abs(diff1(cfg, L, v)) * L / denom)
    return worst


# ---------------------------------------------------------------------------
# translation-invariance test


def translation_invariance_test(
    samples,
    v,
    window,
    battery,
    n_points: int,
    x0=(0.0, 0.0),
    base_sigma: float = 3.0,
) -> dict:
    """Distribution comparison of local views from x0 and x0 + v.

    Splits the sample stream into halves, evaluates each observable on the
    view from x0 (first half) and from x0 + v (second half), and runs
    independent two-sample KS and mean-z tests with Bonferroni correction
    across the battery.
    """
    v = np.asarray(v, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    R = system_domain(n_points).radius
    margin_needed = 0.1 * math.sqrt(n_points)
    for anchor in (x0, x0 + v):
        reach = math.hypot(*anchor) + window.bounding_radius
        if reach > R - margin_needed:
            raise ValueError(
                f"view window around ({anchor[0]:.3g},{anchor[1]:.3g}) leaves "
                f"the bulk (needs margin {margin_needed:.3g})"
            )
    samples = np.asarray(samples, dtype=float)
    paired = math.hypot(*v) < 1e-15
    half = len(samples) if paired else len(samples) // 2
    rows = []
    n_tests = 2 * len(battery)
    thr = bonferroni_threshold(len(battery), base_sigma)
    alpha = 2.0 * norm.sf(base_sigma) / n_tests
    all_pass = True
    for name, f in battery:
        a = np.array([f(local_view(PointConfig(s), x0)) for s in samples[:half]])
        if paired:
            b = a.copy()
        else:
            b = np.array(
                [f(local_view(PointConfig(s), x0 + v)) for s in samples[half:]]
            )
        if np.array_equal(a, b):
            ks_p, z = 1.0, 0.0
        else:
            ks_p = float(ks_2samp(a, b).pvalue)
            pooled = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
            z = float((a.mean() - b.mean()) / pooled) if pooled > 0 else 0.0
        ok = (ks_p > alpha) and (abs(z) < thr)
        all_pass &= ok
        rows.append(
            {
                "name": name,
                "mean_view0": float(a.mean()),
                "mean_view1": float(b.mean()),
                "z": z,
                "ks_pvalue": ks_p,
                "pass": bool(ok),
            }
        )
    return {
        "observables": rows,
        "z_threshold": thr,
        "ks_alpha": alpha,
        "all_pass": bool(all_pass),
        "v": list(map(float, v)),
        "n_per_side": half,
    }


@dataclass
class DiffStats:
    """Samples of the averaged energy shifts at one scale, with exp-moments."""

    L: float
    diff1_samples: list
    diff2_samples: list
    diff1_moment: object = None
    diff2_moment: object = None

    @property
    def window_radius(self) -> float:
        return 10.0 * self.L

    def to_json(self) -> str:
        def moment(est):
            if est is None:
                return None
            return {
                "log_exp_moment": float(est.log_exp_moment),
                "heavy_tail": bool(est.heavy_tail),
                "band": [float(b) for b in est.confidence_band],
            }

        return json.dumps(
            {
                "L": self.L,
                "window_radius": self.window_radius,
                "diff1": [float(x) for x in self.diff1_samples],
                "diff2": [float(x) for x in self.diff2_samples],
                "diff1_moment": moment(self.diff1_moment),
                "diff2_moment": moment(self.diff2_moment),
            }
        )


def constants_csv(reports) -> str:
    """Flatten verify_translation reports into a CSV table, one row per L."""
    header = (
        ["L", "vx", "vy"]
        + [f"psi_plus_{k}" for k in range(4)]
        + [f"psi_minus_{k}" for k in range(4)]
        + [f"rem_{k}" for k in range(3)]
        + ["jacobian_det_max_dev", "inverse_composition_max_err"]
    )
    lines = [",".join(header)]
    for rep in reports:
        row = [rep["L"], rep["v"][0], rep["v"][1]]
        row += [rep["psi_plus"][k] for k in range(4)]
        row += [rep["psi_minus"][k] for k in range(4)]
        row += [rep["rem"][k] for k in range(3)]
        row += [rep["jacobian_det_max_dev"], rep["inverse_composition_max_err"]]
        lines.append(",".join(f"{x:.10g}" for x in row))
    return "\n".join(lines) + "\n"
