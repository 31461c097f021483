import json

import numpy as np
import pytest

from psc_extension.errors import CurvatureSignLost
from psc_extension.flow import (
    StarShapedHypersurface,
    hypersurface_curvatures,
    icf_flow,
    icf_to_metric_path,
    reparametrized_time,
)
from psc_extension.geometry import AngularGrid, AxiFunction, curvature_values


def test_round_sphere_expands_exponentially():
    g = AngularGrid(3, 32)
    res = icf_flow(AxiFunction.constant(g, 1.3), t_min=3.0)
    assert res.final_time >= 3.0
    for j in range(res.times.size):
        exact = 1.3 * np.exp(res.times[j])
        assert np.max(np.abs(res.radius(j) - exact)) / exact < 1e-6
    assert res.limit_radius == pytest.approx(1.3, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4])
def test_gauss_equation(n):
    g = AngularGrid(n, 96)
    surf = StarShapedHypersurface(AxiFunction(g, 1.0 + 0.2 * g.x))
    c = hypersurface_curvatures(surf)
    a, b = surf.induced_metric()
    intrinsic = curvature_values(g, a, b)
    assert np.max(np.abs(intrinsic - c.R.values)) < 1e-8
    assert np.max(np.abs(c.R.values - (c.H.values**2 - c.second_form_norm2.values))) < 1e-10
    assert np.min(c.R.values) > 0 and np.min(c.H.values) > 0


def test_ellipsoid_like_principal_curvatures():
    # sphere of radius 2 centred off the origin: both principal curvatures are 1/2
    g = AngularGrid(3, 96)
    c0, r0 = 0.5, 2.0
    rho = c0 * g.x + np.sqrt(r0**2 - c0**2 * (1 - g.x**2))
    c = hypersurface_curvatures(StarShapedHypersurface(AxiFunction(g, rho)))
    assert np.max(np.abs(c.kappa_merid.values - 0.5)) < 1e-9
    assert np.max(np.abs(c.kappa_azim.values - 0.5)) < 1e-9


@pytest.mark.parametrize("which", ["flow3", "flow4"])
def test_convergence(which, request):
    res = request.getfixturevalue(which)
    assert res.converged
    assert res.final_deviation < 1e-6
    assert res.decay_rate > 0
    late = res.times >= 0.5 * res.final_time
    fit = np.polyfit(res.times[late], np.log(res.deviations[late]), 1)
    resid = np.log(res.deviations[late]) - np.polyval(fit, res.times[late])
    assert np.max(np.abs(resid)) < 0.5
    assert res.burn_in == pytest.approx(0.25 * res.final_time)


def test_pinched_surface_rejected():
    g = AngularGrid(3, 64)
    with pytest.raises(CurvatureSignLost):
        icf_flow(AxiFunction(g, 0.3 + 0.7 * g.x**2))


def test_reparametrized_time():
    assert reparametrized_time(0.0) == 0.0
    assert reparametrized_time(0.5) == pytest.approx(3.0)


def test_metric_path_from_flow(flow3, grid3):
    path = icf_to_metric_path(flow3)
    a0, b0 = path.coefficients(0.0)
    a, b = StarShapedHypersurface(AxiFunction(grid3, 1.0 + 0.3 * grid3.x)).induced_metric()
    assert np.max(np.abs(a0 - a)) < 1e-10 and np.max(np.abs(b0 - b)) < 1e-10
    a1, b1 = path.coefficients(1.0)
    assert np.ptp(a1) < 1e-8 and np.ptp(b1) < 1e-8
    assert path.min_curvature(np.linspace(0.0, 1.0, 257)) > 0
    assert path.diagnostics["closure_d1"] < 1e-6 and path.diagnostics["closure_d2"] < 1e-6


def test_write(flow3, tmp_path):
    flow3.write(tmp_path / "traj.csv", tmp_path / "summary.json")
    rows = np.loadtxt(tmp_path / "traj.csv", delimiter=",", skiprows=1)
    assert rows.shape == (flow3.times.size * flow3.grid.size, 4)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["converged"] is True
