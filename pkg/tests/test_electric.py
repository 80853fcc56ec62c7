import math

import numpy as np
import pytest

from ocplab.core import DiskDomain, PointConfig, system_domain
from ocplab.electric import (
    EnergyEstimate,
    FieldGrid,
    ResolutionError,
    SingularFieldError,
    apriori_bound_check,
    apriori_scan,
    divergence_residual,
    ener_pts,
    f_eta,
    local_electric_energy,
    local_law_scan,
    nn_distance,
    nn_distances,
    scan_csv,
    truncated_field,
)
from ocplab.observables import smooth_radial_bump, tent_function
from ocplab.sampler import initial_config

EMPTY = PointConfig(np.empty((0, 2)))


def test_f_eta_values():
    eta = 0.5
    vals = f_eta([[2 * eta, 0.0], [eta, 0.0], [eta / math.e, 0.0], [0.0, 0.0]], eta)
    assert vals[0] == 0.0 and vals[1] == 0.0
    assert vals[2] == pytest.approx(-1.0)
    assert vals[3] == -math.inf
    with pytest.raises(ValueError):
        f_eta([[1.0, 0.0]], 0.0)


def test_nn_distance_conventions():
    assert nn_distance(PointConfig([[0.3, -0.1]]), 0) == 0.25
    two_close = PointConfig([[0.0, 0.0], [0.1, 0.0]])
    assert nn_distance(two_close, 0) == pytest.approx(0.025)
    two_far = PointConfig([[0.0, 0.0], [7.0, 0.0]])
    assert nn_distance(two_far, 1) == 0.25
    with pytest.raises(IndexError):
        nn_distance(two_far, 2)
    tri = PointConfig([[0.0, 0.0], [0.4, 0.0], [0.0, 3.0]])
    d = nn_distances(tri)
    assert d[0] == pytest.approx(0.1) and d[1] == pytest.approx(0.1)
    assert d[2] == 0.25


def test_field_empty_and_symmetry():
    dom = system_domain(16)
    f = truncated_field(EMPTY, dom, [[0.0, 0.0], [1.0, 0.5]])
    assert np.allclose(f[0], 0.0)
    assert np.allclose(f[1], math.pi * np.array([1.0, 0.5]))
    far = truncated_field(EMPTY, dom, [[2 * dom.radius, 0.0]])
    assert far[0, 0] == pytest.approx(math.pi * dom.radius**2 / (2 * dom.radius))


def test_field_truncation_cancels_inside():
    dom = system_domain(4)
    cfg = PointConfig([[0.0, 0.0]])
    x = np.array([[0.2, 0.1], [0.0, 0.0]])
    f = truncated_field(cfg, dom, x, eta=0.5)
    assert np.allclose(f, math.pi * x)
    outside = np.array([[1.0, 0.0]])
    fo = truncated_field(cfg, dom, outside, eta=0.5)
    assert fo[0, 0] == pytest.approx(math.pi * 1.0 - 1.0)
    with pytest.raises(SingularFieldError):
        truncated_field(cfg, dom, [[0.0, 0.0]], eta=0.0)


def test_field_far_decay():
    cfg = PointConfig([[0.5, 0.0], [-0.3, 0.2], [0.1, -0.6], [0.0, 0.4]])
    dom = system_domain(4)
    R = dom.radius
    near = np.linalg.norm(truncated_field(cfg, dom, [[4 * R, 0.0]])[0])
    farv = np.linalg.norm(truncated_field(cfg, dom, [[8 * R, 0.0]])[0])
    assert farv < near / 3.0


def test_energy_empty_matches_quadrature():
    # the background field is pi x inside the system disk, so the energy over
    # a centered disk of radius rho is pi^2 * (pi rho^4 / 2)
    n = 64
    rho = 1.5
    est = local_electric_energy(EMPTY, DiskDomain((0.0, 0.0), rho), n_points=n)
    oracle = math.pi**2 * math.pi * rho**4 / 2.0
    assert est.value == pytest.approx(oracle, rel=0.02)
    assert est.error < 0.05 * oracle
    off = DiskDomain((1.0, -0.5), 1.0)
    est2 = local_electric_energy(EMPTY, off, n_points=n)
    oracle2 = math.pi**2 * (math.pi * 1.0**4 / 2.0 + math.pi * 1.0**2 * 1.25)
    assert est2.value == pytest.approx(oracle2, rel=0.03)


def test_energy_nonnegative_and_resolution_guard():
    cfg = PointConfig(initial_config(16, seed=0).points)
    omega = DiskDomain((0.0, 0.0), 1.2)
    est = local_electric_energy(cfg, omega)
    assert isinstance(est, EnergyEstimate)
    assert est.value >= 0.0
    r_min = nn_distances(cfg).min()
    with pytest.raises(ResolutionError):
        local_electric_energy(cfg, omega, h=r_min)


def test_energy_grid_self_consistency():
    rng = np.random.default_rng(1)
    omega = DiskDomain((0.0, 0.0), 1.0)
    for seed in range(3):
        pts = initial_config(16, seed=seed).points
        pts = pts + rng.normal(0, 0.03, pts.shape)
        cfg = PointConfig(pts)
        h = nn_distances(cfg).min() / 4.0
        a = local_electric_energy(cfg, omega, h=h)
        b = local_electric_energy(cfg, omega, h=h / 2.0)
        assert b.value == pytest.approx(a.value, rel=0.05)


def test_energy_deterministic():
    cfg = PointConfig(initial_config(16, seed=2).points)
    omega = DiskDomain((0.5, 0.0), 1.0)
    a = local_electric_energy(cfg, omega)
    b = local_electric_energy(cfg, omega)
    assert a.value == b.value and a.error == b.error


def test_truncation_monotonicity():
    cfg = PointConfig(initial_config(16, seed=3).points)
    omega = DiskDomain((0.0, 0.0), 1.5)
    base = nn_distances(cfg)
    scales = [1.0, 0.85, 0.7, 0.55, 0.4]
    h = base.min() * scales[-1] / 4.0
    vals = [
        local_electric_energy(cfg, omega, h=h, eta=base * s).value for s in scales
    ]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo - 1e-6 * abs(lo)


def test_ener_pts_definition():
    cfg = PointConfig(initial_config(32, seed=4).points)
    omega = DiskDomain((0.0, 0.0), 1.5)
    est = local_electric_energy(cfg, omega)
    inside = int(np.count_nonzero(omega.contains(cfg.points)))
    expected = math.sqrt(omega.area) * math.sqrt(est.value) + inside
    assert ener_pts(cfg, omega) == pytest.approx(expected, rel=1e-9)
    assert ener_pts(EMPTY, omega, n_points=32) > 0.0


def test_divergence_residual_refines():
    cfg = PointConfig(initial_config(8, seed=5).points)
    dom = system_domain(8)
    win = DiskDomain((0.0, 0.0), 1.2)
    coarse = divergence_residual(cfg, dom, win, h=0.08)
    fine = divergence_residual(cfg, dom, win, h=0.04)
    assert fine < 0.8 * coarse


def test_local_law_scan_table():
    rng = np.random.default_rng(6)
    n = 256
    dom = system_domain(n)
    samples = np.array([dom.sample_uniform(n, rng) for _ in range(3)])
    rows = local_law_scan(samples, [(0.0, 0.0)], [1.0, 2.0], n, h=0.05, eta=0.2)
    assert [r["ell"] for r in rows] == [1.0, 2.0]
    for r in rows:
        assert r["mean"] > 0 and r["count"] == 3
    csv = scan_csv(rows)
    assert csv.splitlines()[0].startswith("ell,mean,se")
    with pytest.raises(ValueError):
        local_law_scan(samples, [(8.0, 0.0)], [2.0], n, h=0.05, eta=0.2)


def test_apriori_ratio_and_guards():
    n = 64
    cfg = PointConfig(initial_config(n, seed=7).points)
    phi = smooth_radial_bump(1.0)
    omega = DiskDomain((0.0, 0.0), 2.5)
    ratio = apriori_bound_check(cfg, phi, omega, n)
    assert 0.0 <= ratio < math.inf
    zero = smooth_radial_bump(1.0, height=0.0)
    assert apriori_bound_check(cfg, zero, omega, n) == 0.0
    empty_ratio = apriori_bound_check(EMPTY, phi, omega, n)
    assert math.isfinite(empty_ratio)
    with pytest.raises(ValueError):
        apriori_bound_check(cfg, phi, DiskDomain((0.0, 0.0), 1.5), n)


def test_apriori_scan_ceiling_is_stable():
    omega = DiskDomain((0.0, 0.0), 2.2)
    phis = [smooth_radial_bump(1.0), tent_function(1.0), smooth_radial_bump(0.6)]
    rng = np.random.default_rng(8)

    def configs(n, count):
        dom = system_domain(n)
        return [PointConfig(dom.sample_uniform(n, rng)) for _ in range(count)]

    small = apriori_scan(configs(64, 6), phis, omega, 64, h=0.05, eta=0.2)
    large = apriori_scan(configs(256, 6), phis, omega, 256, h=0.05, eta=0.2)
    assert small["max_ratio"] > 0
    assert large["max_ratio"] <= 1.5 * small["max_ratio"] + 0.1


def test_field_grid_build():
    cfg = PointConfig(initial_config(8, seed=9).points)
    grid = FieldGrid.build(cfg, DiskDomain((0.0, 0.0), 1.0), system_domain(8), 0.05)
    assert grid.nodes.shape == grid.values.shape
    assert np.all(np.hypot(grid.nodes[:, 0], grid.nodes[:, 1]) <= 1.0)
    assert grid.energy() > 0
