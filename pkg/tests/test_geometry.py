import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psc_extension.errors import ResolutionError
from psc_extension.geometry import (
    AngularGrid,
    AxiFunction,
    AxiMetric,
    RadialProfile,
    c2_distance,
    laplace_beltrami,
    scalar_curvature_axi,
    scalar_curvature_conformal,
    scalar_curvature_warped_line,
    sphere_volume,
    volume,
)


def test_sphere_volumes():
    assert sphere_volume(1) == pytest.approx(2 * np.pi, rel=1e-14)
    assert sphere_volume(2) == pytest.approx(4 * np.pi, rel=1e-14)
    assert sphere_volume(3) == pytest.approx(2 * np.pi**2, rel=1e-14)
    assert sphere_volume(4) == pytest.approx(8 * np.pi**2 / 3, rel=1e-14)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("radius", [1.0, 0.5, 2.7])
def test_round_sphere(n, radius):
    g = AngularGrid(n, 64)
    m = AxiMetric.round(g, radius)
    R = scalar_curvature_axi(m).values
    assert np.max(np.abs(R - n * (n - 1) / radius**2)) < 1e-10
    assert volume(m) == pytest.approx(sphere_volume(n) * radius**n, rel=1e-13)


def test_grid_quadrature_and_derivatives(grid3):
    g = grid3
    # weights integrate against (1 - x^2)^((n-2)/2) dx, total sphere_volume(n)/sphere_volume(n-1)
    assert g.total_weight == pytest.approx(sphere_volume(3) / sphere_volume(2), rel=1e-13)
    f = np.exp(0.3 * g.x)
    assert np.max(np.abs(g.dx(f) - 0.3 * f)) < 1e-10
    err2 = np.abs(g.dxx(f) - 0.09 * f)
    assert np.max(err2) < 1e-6
    assert np.max(err2[np.abs(g.x) < 0.9]) < 1e-9
    xs = np.linspace(-1, 1, 7)
    assert np.max(np.abs(g.interpolate(f, xs) - np.exp(0.3 * xs))) < 1e-13


@pytest.mark.parametrize("eps", [0.05, 0.15, 0.3])
def test_conformal_closed_form_n3(grid3, eps):
    # Delta_round cos(theta) = -3 cos(theta) on S^3, so R = u^-5 (24 eps x + 6 u)
    g = grid3
    u = 1.0 + eps * g.x
    oracle = u**-5 * (24.0 * eps * g.x + 6.0 * u)
    R_axi = scalar_curvature_axi(AxiMetric.conformal(g, u**4)).values
    R_conf = scalar_curvature_conformal(AxiFunction(g, u**4)).values
    assert np.max(np.abs(R_axi - oracle)) < 1e-8
    assert np.max(np.abs(R_conf - oracle)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-0.12, 0.12), min_size=2, max_size=5), st.sampled_from([3, 4, 5]))
def test_cross_operator_agreement(coeffs, n):
    g = AngularGrid(n, 96)
    c = AxiFunction(g, np.exp(np.polynomial.polynomial.polyval(g.x, [0.0] + coeffs)))
    R1 = scalar_curvature_conformal(c).values
    R2 = scalar_curvature_axi(AxiMetric.conformal(g, c.values)).values
    assert np.max(np.abs(R1 - R2)) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0))
def test_homothety(lam):
    g = AngularGrid(3, 64)
    m = AxiMetric.conformal(g, (1 + 0.2 * g.x) ** 4)
    R = scalar_curvature_axi(m).values
    Rs = scalar_curvature_axi(m.scaled(lam)).values
    assert np.max(np.abs(Rs - R / lam)) < 1e-10 * max(1.0, np.max(np.abs(R)))
    assert volume(m.scaled(lam)) == pytest.approx(volume(m) * lam**1.5, rel=1e-13)


def test_laplacian_integrates_to_zero(grid3, rng):
    g = grid3
    m = AxiMetric.conformal(g, (1 + 0.25 * g.x) ** 4)
    u = AxiFunction(g, np.polynomial.polynomial.polyval(g.x, rng.normal(size=6)))
    lap = laplace_beltrami(m, u).values
    dV = m.a * m.beta ** (g.n - 1)
    assert abs(g.integrate(lap * dV)) < 1e-8


def test_poles_close_for_smooth_metrics(grid3):
    m = AxiMetric.conformal(grid3, (1 + 0.3 * grid3.x) ** 4)
    assert np.max(m.closure_defect()) < 1e-14
    m.check()
    with pytest.raises(ValueError):
        AxiMetric(m.a, m.beta * (1 + 0.1 * grid3.x), grid3).check()


def test_under_resolved_metric_raises():
    g = AngularGrid(3, 12)
    m = AxiMetric.conformal(g, np.exp(8.0 * g.x**7))
    with pytest.raises(ResolutionError):
        scalar_curvature_axi(m)


def test_axi_function_theta_derivatives(grid3):
    f = AxiFunction(grid3, grid3.x**2)  # cos^2
    th = np.array([0.3, 1.1, 2.5])
    assert np.allclose(f(th), np.cos(th) ** 2, atol=1e-13)
    assert np.allclose(f.derivative(th, 1), -np.sin(2 * th), atol=1e-12)
    assert np.allclose(f.derivative(th, 2), -2 * np.cos(2 * th), atol=1e-10)
    assert max(abs(v) for v in f.pole_odd_derivatives()) < 1e-10


def test_warped_line_models():
    s = np.linspace(0.1, 3.0, 50)
    flat = RadialProfile(0.1, 3.0, 3, lambda t: (t, np.ones_like(t), np.zeros_like(t)))
    assert np.max(np.abs(scalar_curvature_warped_line(flat, s))) < 1e-12
    sphere = RadialProfile(0.1, 3.0, 4, lambda t: (np.sin(t), np.cos(t), -np.sin(t)))
    assert np.max(np.abs(scalar_curvature_warped_line(sphere, s) - 20.0)) < 1e-10
    cyl = RadialProfile.constant(2.0, 0.0, 1.0, 3)
    assert np.allclose(scalar_curvature_warped_line(cyl), 6.0 / 4.0)


def test_profile_shift_and_spline():
    s = np.linspace(0.0, 1.0, 201)
    f = RadialProfile.from_samples(s, 1.0 + s**2, 3)
    assert abs(f(np.array([0.5]), 1)[0] - 1.0) < 1e-9
    g = f.shifted(2.0)
    assert g.start == 2.0 and g.stop == 3.0
    assert g(np.array([2.5]))[0] == f(np.array([0.5]))[0]


def test_c2_distance(grid3):
    m = AxiMetric.round(grid3)
    assert c2_distance(m, m) == 0.0
    assert c2_distance(m, AxiMetric.round(grid3, 1.1)) == pytest.approx(0.1, rel=1e-12)
