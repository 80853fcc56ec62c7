import json
import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from ocplab.core import DiskDomain, PointConfig, build_dyadic_partition
from ocplab.movefn import (
    CanonicalConstraintError,
    CoverageError,
    MoveKernel,
    convergence_diagnostic,
    layer_background,
    layer_term,
    measured_layer_constants,
    partial_move,
    partial_move_direct,
    partial_move_tilde,
    phi_ix,
    taylor_split,
)
from ocplab.sampler import initial_config

PART = build_dyadic_partition()
EMPTY = PointConfig(np.empty((0, 2)))


def oracle_layer_background(i, x, lam):
    """Independent polar quadrature of the layer background outside a
    centered disk window (the radial domain is exact, no indicators)."""
    lo, hi = PART.support(i)
    r0 = max(lo, lam.radius)

    def f(r, th):
        chi = float(PART.chi_radial(i, r))
        if chi == 0.0:
            return 0.0
        d = math.hypot(x[0] - r * math.cos(th), x[1] - r * math.sin(th))
        return r * chi * (math.log(r) - math.log(d))

    val, _ = dblquad(f, 0, 2 * math.pi, r0, hi, epsabs=1e-9)
    return val


def test_phi_ix_zero_cases():
    phi0 = phi_ix(3, (0.0, 0.0), PART)
    pts = np.array([[5.0, 1.0], [6.0, -2.0]])
    assert np.allclose(phi0(pts), 0.0)
    phi = phi_ix(3, (0.5, 0.2), PART)
    far = np.array([[100.0, 0.0], [0.5, 0.5]])  # outside the layer annulus
    assert np.allclose(phi(far), 0.0)


def test_phi_ix_first_order_bound():
    # far layers see an interior point only through its dipole: |phi| <~ 2^-i |x|
    rng = np.random.default_rng(0)
    for i in (6, 8, 9):
        lo, hi = PART.support(i)
        r = rng.uniform(lo, hi, 400)
        th = rng.uniform(0, 2 * math.pi, 400)
        pts = np.column_stack((r * np.cos(th), r * np.sin(th)))
        for xnorm in (0.3, 1.0):
            x = (xnorm, 0.0)
            vals = phi_ix(i, x, PART)(pts)
            assert np.max(np.abs(vals)) <= 4.0 * 2.0 ** (-i) * xnorm


def test_taylor_split_reassembles():
    rng = np.random.default_rng(1)
    for i in (4, 6):
        x = rng.uniform(-1, 1, 2)
        linear, rem = taylor_split(i, x, PART)
        lo, hi = PART.support(i)
        r = rng.uniform(lo, hi, 200)
        th = rng.uniform(0, 2 * math.pi, 200)
        pts = np.column_stack((r * np.cos(th), r * np.sin(th)))
        phi = phi_ix(i, x, PART)
        assert np.allclose(linear(pts) + rem(pts), phi(pts), atol=1e-12)


def test_taylor_split_zero_point_and_overlap_guard():
    _, rem = taylor_split(5, (0.0, 0.0), PART)
    pts = np.array([[20.0, 3.0], [17.0, -8.0]])
    assert np.allclose(rem(pts), 0.0, atol=1e-14)
    with pytest.raises(ValueError):
        taylor_split(1, (0.1, 0.0), PART, lam=DiskDomain((0, 0), 1.5))


def test_layer_constants_scale_as_expected():
    # rescaled J and Rem constants stay bounded across layers
    consts = [measured_layer_constants(i, (0.7, 0.4), PART) for i in range(4, 9)]
    for key in ("J0", "J1", "Rem0", "Rem1"):
        vals = [c[key] for c in consts]
        assert max(vals) < 50.0
        assert max(vals) < 5.0 * max(min(vals), 1e-9) or max(vals) < 5.0


def test_layer_background_matches_oracle():
    lam = DiskDomain((0.0, 0.0), 0.8)
    rng = np.random.default_rng(2)
    for i in (0, 1, 2):
        x = 0.7 * rng.uniform(-0.5, 0.5, 2)
        ours = layer_background(i, x, lam, PART)
        oracle = oracle_layer_background(i, x, lam)
        assert ours == pytest.approx(oracle, abs=5e-7)


def test_single_pair_layer_arithmetic():
    # one interior point, one exterior point: the point part is bare kernel
    # arithmetic and the background part is the quadrature oracle
    lam = DiskDomain((0.0, 0.0), 0.8)
    x = np.array([0.3, -0.1])
    y = np.array([1.5, 0.4])
    for i in (0, 1):
        val = layer_term(i, x[None, :], y[None, :], lam, PART)
        ry = math.hypot(*y)
        chi = float(PART.chi_radial(i, ry))
        kernel = chi * (math.log(ry) - math.log(np.hypot(*(x - y))))
        assert val == pytest.approx(kernel - oracle_layer_background(i, x, lam), abs=1e-6)


def test_tilde_empty_interior_is_zero():
    cfg = PointConfig([[3.0, 0.0], [0.0, 5.0]])
    lam = DiskDomain((0.0, 0.0), 1.0)
    assert partial_move_tilde(EMPTY, cfg, lam, 3, coverage_radius=math.inf) == 0.0


def test_tilde_layer_additivity():
    rng = np.random.default_rng(3)
    cfg = PointConfig(initial_config(128, seed=4).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    xp = PointConfig(lam.sample_uniform(3, rng))
    total, layers = partial_move_tilde(xp, cfg, lam, 4, n_points=128, per_layer=True)
    assert total == pytest.approx(sum(layers), abs=1e-12)
    t3 = partial_move_tilde(xp, cfg, lam, 3, n_points=128)
    assert total == pytest.approx(t3 + layers[4], abs=1e-10)


def test_finite_system_stabilizes_exactly():
    # once the layer inner radius clears the system disk, layers vanish
    cfg = PointConfig(initial_config(16, seed=5).points)
    lam = DiskDomain((0.0, 0.0), 1.0)
    rng = np.random.default_rng(6)
    xp = PointConfig(lam.sample_uniform(cfg.restrict(lam).n, rng))
    v3 = partial_move_tilde(xp, cfg, lam, 3, n_points=16)
    v8 = partial_move_tilde(xp, cfg, lam, 8, n_points=16)
    assert v8 == v3


def test_finite_and_infinite_forms_coincide_for_small_p():
    # all level <= p structure sits far inside the system disk
    cfg = PointConfig(initial_config(1024, seed=7).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    rng = np.random.default_rng(8)
    xp = PointConfig(lam.sample_uniform(cfg.restrict(lam).n, rng))
    fin = partial_move_tilde(xp, cfg, lam, 1, n_points=1024)
    inf_form = partial_move_tilde(xp, cfg, lam, 1, coverage_radius=math.inf)
    assert fin == pytest.approx(inf_form, abs=1e-9)


def test_partial_move_identity_and_errors():
    cfg = PointConfig(initial_config(128, seed=9).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    x_lam = cfg.restrict(lam)
    assert partial_move(x_lam, cfg, lam, 3, n_points=128) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(10)
    xp = PointConfig(lam.sample_uniform(x_lam.n, rng))
    a = partial_move(xp, cfg, lam, 3, n_points=128)
    b = partial_move_direct(xp, cfg, lam, 3, n_points=128)
    assert a == pytest.approx(b, abs=1e-9)
    with pytest.raises(CanonicalConstraintError):
        partial_move(PointConfig([[0.0, 0.0]]), cfg, lam, 3, n_points=128)


def test_canonical_neutrality():
    # adding the same interior point to both sides changes nothing
    cfg = PointConfig(initial_config(128, seed=11).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    x_lam = cfg.restrict(lam)
    rng = np.random.default_rng(12)
    xp_pts = lam.sample_uniform(x_lam.n, rng)
    base = partial_move(PointConfig(xp_pts), cfg, lam, 3, n_points=128)
    z = np.array([[0.05, -0.07]])
    cfg2 = PointConfig(np.vstack((cfg.points, z)))
    aug = partial_move(
        PointConfig(np.vstack((xp_pts, z))), cfg2, lam, 3, n_points=129
    )
    assert aug == pytest.approx(base, abs=1e-9)


def test_translation_equivariance():
    cfg = PointConfig(initial_config(128, seed=13).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    rng = np.random.default_rng(14)
    xp = PointConfig(lam.sample_uniform(cfg.restrict(lam).n, rng))
    base = partial_move(xp, cfg, lam, 3, n_points=128)
    u = np.array([0.4, -0.9])
    from ocplab.core import translate_window

    shifted = partial_move(
        PointConfig(xp.points + u),
        PointConfig(cfg.points + u),
        translate_window(lam, u),
        3,
        n_points=128,
        origin=(u[0], u[1]),
    )
    assert shifted == pytest.approx(base, abs=1e-9)


def test_coverage_error():
    cfg = PointConfig([[2.0, 0.0], [0.0, 3.0]])
    lam = DiskDomain((0.0, 0.0), 1.0)
    xp = PointConfig([[0.1, 0.1]])
    with pytest.raises(CoverageError):
        partial_move_tilde(xp, cfg, lam, 5)


def test_convergence_diagnostic_fields_and_json():
    cfg = PointConfig(initial_config(256, seed=15).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    rng = np.random.default_rng(16)
    xp = PointConfig(lam.sample_uniform(cfg.restrict(lam).n, rng))
    ev = convergence_diagnostic(xp, cfg, lam, 4, n_points=256, tolerance=1e-3)
    assert ev.p_values == [0, 1, 2, 3, 4]
    assert len(ev.increments) == 4
    assert ev.move_values[-1] == pytest.approx(sum(ev.layer_contributions), abs=1e-10)
    payload = json.loads(ev.to_json())
    assert payload["converged"] in (True, False)
    assert len(payload["move_values"]) == 5


def test_adversarial_exterior_not_converged():
    # all exterior mass on one side: the dipole sums keep growing with p
    rng = np.random.default_rng(17)
    r = np.exp(rng.uniform(math.log(2.0), math.log(300.0), 400))
    th = rng.uniform(-0.05, 0.05, 400)
    ext = np.column_stack((r * np.cos(th), r * np.sin(th)))
    inner = np.array([[0.5, 0.0]])
    cfg = PointConfig(np.vstack((inner, ext)))
    lam = DiskDomain((0.0, 0.0), 1.0)
    xp = PointConfig([[-0.5, 0.0]])
    ev = convergence_diagnostic(
        xp, cfg, lam, 7, tolerance=1e-3, coverage_radius=math.inf
    )
    assert not ev.converged


def test_move_kernel_matches_layered_route():
    cfg = PointConfig(initial_config(256, seed=18).points)
    lam = DiskDomain((0.0, 0.0), 1.5)
    kern = MoveKernel(lam, 4, n_points=256, n_grid=200)
    kern.set_exterior(cfg)
    rng = np.random.default_rng(19)
    x_lam = cfg.restrict(lam)
    xp = PointConfig(lam.sample_uniform(x_lam.n, rng))
    fast = kern.move(xp, x_lam)
    slow = partial_move(xp, cfg, lam, 4, n_points=256)
    assert fast == pytest.approx(slow, abs=2e-6)
