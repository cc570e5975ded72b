import numpy as np
import pytest

from qlm.dsl import parse_metric
from qlm.grid import SphereGrid
from qlm.spacetime import minkowski, schwarzschild_isotropic
from qlm.surface import (GeometryError, boosted_sphere_chart, compute_geometry,
                         connection_form, dual_normal_J, induced_metric,
                         mean_curvature_vector, round_sphere_chart,
                         surface_calculus)

from conftest import BETA, GAMMA, halving_ratio

RADII = (250.0, 500.0, 1000.0, 2000.0)
BG = BETA * GAMMA


def rho_t(theta):
    return np.sqrt(1 + BG ** 2 * np.cos(theta) ** 2)


def test_chart_reference_points():
    c = boosted_sphere_chart(BETA, GAMMA, 7.0)
    Y, _, _ = c.evaluate(0.0, 0.3)
    np.testing.assert_allclose(Y, [BG * 7, 0, 0, GAMMA * 7], atol=1e-14)
    Y, _, _ = c.evaluate(np.pi / 2, 0.0)
    np.testing.assert_allclose(Y, [0, 0, 7, 0], atol=1e-14)


def test_chart_lies_in_boosted_slice():
    g = SphereGrid(32, 8)
    Y, _, _ = boosted_sphere_chart(BETA, GAMMA, 3.0).evaluate(*g.mesh())
    assert np.max(np.abs(GAMMA * Y[..., 0] - BG * Y[..., 3])) < 1e-14


def test_chart_derivatives_match_finite_differences():
    c = boosted_sphere_chart(BETA, GAMMA, 2.0)
    th, ph, h = 0.7, 1.1, 1e-5
    Y, Yd, Ydd = c.evaluate(th, ph)
    fd_t = (c.evaluate(th + h, ph)[0] - c.evaluate(th - h, ph)[0]) / (2 * h)
    fd_p = (c.evaluate(th, ph + h)[0] - c.evaluate(th, ph - h)[0]) / (2 * h)
    np.testing.assert_allclose(Yd[0], fd_t, atol=1e-9)
    np.testing.assert_allclose(Yd[1], fd_p, atol=1e-9)
    fd_tp = (c.evaluate(th + h, ph)[1][1] - c.evaluate(th - h, ph)[1][1]) / (2 * h)
    np.testing.assert_allclose(Ydd[0, 1], fd_tp, atol=1e-9)


@pytest.mark.parametrize("beta, gamma", [(0.6, 1.2), (0.0, 2.0), (0.5, -1.0)])
def test_inconsistent_boost(beta, gamma):
    with pytest.raises(ValueError):
        boosted_sphere_chart(beta, gamma, 1.0)


def test_round_sphere_in_minkowski():
    r0 = 10.0
    c = round_sphere_chart(r0)
    th = np.array([0.3, 1.2, 2.9])
    ph = np.array([0.0, 2.0, 4.0])
    sigma = induced_metric(c, minkowski(), th, ph)
    np.testing.assert_allclose(sigma[:, 0, 0], r0 ** 2)
    np.testing.assert_allclose(sigma[:, 1, 1], (r0 * np.sin(th)) ** 2)
    np.testing.assert_allclose(sigma[:, 0, 1], 0, atol=1e-12)
    H, Hn = mean_curvature_vector(c, minkowski(), th, ph)
    N = np.stack([0 * th, np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph),
                  np.cos(th)], -1)
    np.testing.assert_allclose(H, -(2 / r0) * N, atol=1e-15)
    np.testing.assert_allclose(Hn, 2 / r0, rtol=1e-14)
    J = dual_normal_J(c, minkowski(), th, ph)
    np.testing.assert_allclose(J, np.tile([2 / r0, 0, 0, 0], (3, 1)), atol=1e-15)
    np.testing.assert_allclose(dual_normal_J(c, minkowski(), th, ph, H=H), J,
                               atol=1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.6])
def test_minkowski_connection_vanishes(beta):
    gamma = 1 / np.sqrt(1 - beta ** 2)
    geo = compute_geometry(boosted_sphere_chart(beta, gamma, 5.0), minkowski(),
                           SphereGrid(32, 4))
    assert np.max(np.abs(geo.omega)) < 1e-9


def test_induced_metric_and_volume_asymptotics(boosted_family):
    res_metric, res_volume = [], []
    for r0 in RADII:
        geo, _ = boosted_family.at(r0)
        th = geo.theta
        rt = rho_t(th)
        expected = 1 + (2 / rt) * (1 + 2 * BG ** 2 * np.sin(th) ** 2) / r0
        res_metric.append(np.max(np.abs(geo.sigma[..., 0, 0] / r0 ** 2 - expected)))
        vol = 1 + (2 / rt) * (1 + BG ** 2 * np.sin(th) ** 2) / r0
        res_volume.append(np.max(np.abs(geo.sqrt_det / (r0 ** 2 * np.sin(th)) - vol)))
    # remainders are O(1/r0²): halving ratio 4
    for res in (res_metric, res_volume):
        np.testing.assert_allclose(halving_ratio(np.cumsum(res[::-1])[::-1]), 4,
                                   rtol=0.1)
        r = np.array(res)
        np.testing.assert_allclose(r[:-1] / r[1:], 4, rtol=0.05)


def test_normality_and_dual_normal_relations(boosted_family):
    for r0 in (3.0, 50.0, 2000.0):
        geo, _ = boosted_family.at(r0)
        Hn = geo.H_norm
        for a in (0, 1):
            T = geo.Yd[..., a, :]
            tn = np.sqrt(geo.inner(T, T))
            assert np.max(np.abs(geo.inner(geo.H, T)) / (Hn * tn)) < 1e-9
            assert np.max(np.abs(geo.inner(geo.J, T)) / (Hn * tn)) < 1e-9
        HH = geo.inner(geo.H, geo.H)
        assert np.max(np.abs(geo.inner(geo.J, geo.J) + HH) / HH) < 1e-10
        assert np.max(np.abs(geo.inner(geo.J, geo.H)) / HH) < 1e-10
        assert np.all(geo.J[..., 0] > 0)


def test_leading_mean_curvature(boosted_family):
    geo, _ = boosted_family.at(2000.0)
    np.testing.assert_allclose(2000.0 * geo.H_norm, 2, rtol=2e-3)


def test_static_mean_curvature_expansion(static_family):
    # |H| = 2/r0 - 4/r0² + O(1/r0³) for M = 1
    rem = []
    for r0 in RADII:
        geo, _ = static_family.at(r0)
        rem.append(np.max(np.abs(geo.H_norm - 2 / r0 + 4 / r0 ** 2)))
    rem = np.array(rem)
    np.testing.assert_allclose(rem[:-1] / rem[1:], 8, rtol=0.05)


def test_J_approaches_twice_B(boosted_family):
    errs = []
    for r0 in RADII:
        geo, _ = boosted_family.at(r0)
        _, B, _ = geo.chart.frames(geo.theta, geo.phi)
        errs.append(np.max(np.abs(r0 * geo.J - 2 * B)))
    errs = np.array(errs)
    np.testing.assert_allclose(errs[:-1] / errs[1:], 2, rtol=0.1)


def test_frame_asymptotics(boosted_family):
    rows = []
    for r0 in RADII:
        geo, _ = boosted_family.at(r0)
        N, B, T = geo.chart.frames(geo.theta, geo.phi)
        ip = geo.inner
        rows.append([np.max(np.abs(ip(N, N) - 1)), np.max(np.abs(ip(B, B) + 1)),
                     np.max(np.abs(ip(N, T))), np.max(np.abs(ip(B, T)))])
    rows = np.array(rows)
    np.testing.assert_allclose(rows[:-1] / rows[1:], 2, rtol=0.1)


def test_axisymmetry_of_scalar_fields():
    fam_geo = compute_geometry(boosted_sphere_chart(BETA, GAMMA, 40.0),
                               schwarzschild_isotropic(1.0), SphereGrid(32, 8))
    for f in (fam_geo.H_norm, fam_geo.sqrt_det, fam_geo.omega[..., 0],
              fam_geo.sigma[..., 0, 0], fam_geo.sigma[..., 1, 1]):
        spread = np.max(np.abs(f - f[:, :1]))
        assert spread <= 1e-12 * np.max(np.abs(f))
    assert np.max(np.abs(fam_geo.omega[..., 1])) < 1e-12 * np.max(np.abs(fam_geo.omega))


def test_static_connection_vanishes(static_family):
    geo, _ = static_family.at(500.0)
    # r0³⟨∇_θ J, H⟩ = r0³ ω_θ |H|²
    assert np.max(np.abs(500.0 ** 3 * geo.omega[..., 0] * geo.H_norm ** 2)) < 1e-9


def test_spectral_and_stencil_connection_agree(boosted_family):
    geo, _ = boosted_family.at(20.0)
    th, ph = geo.theta[::9, :2], geo.phi[::9, :2]
    W = np.stack([np.ones_like(th), 0.5 * np.ones_like(th)], -1)
    fd = connection_form(geo.chart, boosted_family.metric, th, ph, W)
    spec = geo.connection(np.broadcast_to([1.0, 0.5], geo.omega.shape))[::9, :2]
    np.testing.assert_allclose(fd, spec, rtol=1e-8, atol=1e-12 * np.abs(spec).max())


def test_surface_calculus_on_round_sphere():
    g = SphereGrid(64, 4)
    r = 3.0
    geo = compute_geometry(round_sphere_chart(r), minkowski(), g)
    th, ph = g.mesh()
    grad, grad_sq, lap = surface_calculus(g, geo.sigma, np.cos(th))
    np.testing.assert_allclose(lap, -2 * np.cos(th) / r ** 2, atol=1e-12)
    np.testing.assert_allclose(grad_sq, np.sin(th) ** 2 / r ** 2, atol=1e-13)
    # an l = 1 mode with φ dependence
    f = np.sin(th) * np.cos(ph)
    _, _, lap = surface_calculus(g, geo.sigma, f)
    np.testing.assert_allclose(lap, -2 * f / r ** 2, atol=1e-12)
    assert geo.integrate(np.ones(g.shape)) == pytest.approx(4 * np.pi * r ** 2, rel=1e-12)


def test_degenerate_metric_rejected():
    g = SphereGrid(16, 4)
    with pytest.raises(GeometryError):
        surface_calculus(g, np.zeros(g.shape + (2, 2)), np.ones(g.shape))


def test_trapped_sphere_is_reported():
    # exponentially expanding space: spheres with radius > 1 at y0 = 0 are trapped
    metric = parse_metric({"(0,0)": "-1", "(1,1)": "exp(2*y0)",
                           "(2,2)": "exp(2*y0)", "(3,3)": "exp(2*y0)"})
    with pytest.raises(GeometryError, match="not spacelike") as err:
        compute_geometry(round_sphere_chart(3.0), metric, SphereGrid(16, 4))
    assert len(err.value.nodes) == 64
    theta, phi, why = err.value.nodes[0]
    assert 0 < theta < np.pi and why == "mean curvature not spacelike"
    # an untrapped sphere in the same spacetime is fine
    geo = compute_geometry(round_sphere_chart(0.5), metric, SphereGrid(16, 4))
    assert np.all(geo.H_norm > 0)
