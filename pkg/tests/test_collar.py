import numpy as np
import pytest

from psc_extension.collar import (
    EPS_GRID,
    CollarMetric,
    collar_boundary_report,
    collar_fields,
    collar_table,
    find_A,
    neck_profile_values,
)
from psc_extension.errors import SearchExhausted
from psc_extension.geometry import AxiMetric, warped_curvature_values
from psc_extension.paths import constant_path


@pytest.fixture(scope="module")
def found_A(mild_path):
    return find_A(mild_path[3])


def test_find_A_positive_on_eps_grid(mild_path, found_A):
    path = mild_path[3]
    assert found_A == 2.0
    t = np.linspace(0.0, 1.0, 2 * 128 + 1)
    for eps in EPS_GRID:
        _, R, _ = collar_fields(CollarMetric(found_A, eps, path), t)
        assert np.min(R) > 0


@pytest.mark.parametrize("eps", [0.0, 0.3, 1.0])
def test_plateau_matches_neck_profile(mild_path, found_A, eps):
    path = mild_path[3]
    rho = path.top_radius()
    t = np.linspace(0.5, 1.0, 21)
    _, R, H = collar_fields(CollarMetric(found_A, eps, path), t)
    f, fp, fpp = neck_profile_values(rho, found_A, eps, found_A * t)
    oracle = warped_curvature_values(f, fp, fpp, 3)
    assert np.max(np.abs(R - oracle[:, None])) < 1e-8
    assert np.max(np.abs(H - (3 * fp / f)[:, None])) < 1e-8


def test_boundary_minimal_and_mean_convex(mild_path, found_A):
    for eps in (0.0, 0.5, 1.0):
        rep = collar_boundary_report(CollarMetric(found_A, eps, mild_path[3]))
        assert rep.boundary_residual < 1e-8
        assert rep.closed_form_gap <= rep.gap_budget
        if eps > 0:
            assert rep.min_slice_H > 0 and rep.foliation_ok


def test_round_collar_mean_curvature_closed_form(grid3):
    path = constant_path(AxiMetric.round(grid3))
    _, _, H = collar_fields(CollarMetric(10.0, 1.0, path), np.array([0.0, 1.0]))
    assert np.max(np.abs(H[0])) == 0.0
    assert np.allclose(H[1], 0.15, atol=1e-15)


def test_non_psc_path_rejected(strong_path):
    with pytest.raises(SearchExhausted):
        find_A(strong_path[3])


def test_neck_profile_derivatives():
    s = np.linspace(0.0, 3.0, 7)
    h = 1e-6
    f, fp, fpp = neck_profile_values(1.2, 2.0, 0.4, s)
    assert np.allclose(fp, (neck_profile_values(1.2, 2.0, 0.4, s + h)[0] - neck_profile_values(1.2, 2.0, 0.4, s - h)[0]) / (2 * h), atol=1e-9)
    assert np.allclose(fpp, (neck_profile_values(1.2, 2.0, 0.4, s + h)[1] - neck_profile_values(1.2, 2.0, 0.4, s - h)[1]) / (2 * h), atol=1e-8)
    assert f[0] == 1.2


def test_collar_table_shape(mild_path, found_A, grid3):
    t = np.linspace(0.0, 0.5, 5)
    tab = collar_table(CollarMetric(found_A, 0.2, mild_path[3]), t)
    assert tab.shape == (5 * grid3.size, 6)
