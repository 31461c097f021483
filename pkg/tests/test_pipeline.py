import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psc_extension.errors import MatchingFailed, PreconditionError
from psc_extension.geometry import sphere_volume
from psc_extension.pipeline import (
    BuildConfig,
    CompositeMetric,
    build,
    match_parameters,
    solve_slope_equation,
    threshold_mass,
    verify,
)
from psc_extension.schwarzschild import solve_profile

ROUND = {"n": 3, "input": {"class": "conformal", "cos_poly": [1.0]}, "mass": 0.55}


def test_threshold_mass_examples():
    assert threshold_mass(2 * np.pi**2, 3) == pytest.approx(0.5, rel=1e-14)
    for n in (3, 4, 5, 6):
        assert threshold_mass(sphere_volume(n), n) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(ValueError):
        threshold_mass(0.0, 3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.sampled_from([3, 4, 5]))
def test_threshold_homogeneity(lam, n):
    v = 3.7
    assert threshold_mass(lam**n * v, n) == pytest.approx(lam ** (n - 1) * threshold_mass(v, n), rel=1e-12)


def test_slope_equation():
    eps = solve_slope_equation(0.01, 1.0, 20.0)
    # eps / sqrt(1 + eps) = 0.2  <=>  eps^2 - 0.04 eps - 0.04 = 0
    assert eps == pytest.approx((0.04 + np.sqrt(0.04**2 + 0.16)) / 2, abs=1e-12)
    assert eps == pytest.approx(0.2209975124, abs=1e-10)
    assert solve_slope_equation(1.0, 1.0, 20.0) is None


def test_matching_for_round_input():
    profile = solve_profile(0.55, 3)
    assert profile(np.array([0.0]))[0] == pytest.approx(np.sqrt(1.1), rel=1e-14)
    match = match_parameters(profile, 2.0, 1.0)
    assert 0 < match.eps < 1 and match.height_gap > 0
    neck_slope = match.eps / (2.0 * np.sqrt(1 + match.eps))
    assert abs(neck_slope - match.slope) < 1e-12


def test_large_mass_matches_easily():
    match = match_parameters(solve_profile(50.0, 3), 2.0, 1.0)
    assert match.attempts == 1 and match.eps < 1


def test_matching_failure_reports_diagnostics():
    with pytest.raises(MatchingFailed) as err:
        match_parameters(solve_profile(0.5, 3), 2.0, 1.01, attempts=4)
    assert len(err.value.diagnostics["attempts"]) == 4


def test_config_validation():
    with pytest.raises(ValueError):
        BuildConfig.from_dict(dict(ROUND, n=2))
    with pytest.raises(ValueError, match="non-constructive"):
        BuildConfig.from_dict(dict(ROUND, input={"class": "general", "cos_poly": [1.0]}))
    with pytest.raises(ValueError):
        BuildConfig.from_dict(dict(ROUND, mass_ratio=1.1))
    cfg = BuildConfig.from_dict(ROUND)
    assert BuildConfig.from_dict(cfg.to_dict()) == cfg


@pytest.fixture(scope="module")
def round_build():
    return build(BuildConfig.from_dict(ROUND))


def test_round_build(round_build):
    rep = round_build.report
    assert rep.passed
    assert rep.adm_mass == 0.55
    assert rep.penrose_ratio == pytest.approx(1.1, rel=1e-12)
    assert rep.boundary_volume == pytest.approx(2 * np.pi**2, rel=1e-12)
    assert rep.boundary_mean_curvature < 1e-8
    assert rep.min_slice_mean_curvature > 0
    assert all(v > 0 for k, v in rep.min_curvature.items() if k != "tail_max_abs")
    assert rep.min_curvature["tail_max_abs"] < 1e-8
    assert rep.parameters["rho"] == pytest.approx(1.0, abs=1e-12)


def test_outer_region_is_bitwise_neck(round_build):
    comp = round_build.composite
    neck, bridge = comp.segment("neck"), comp.segment("bridge")
    assert neck["stop"] == bridge["start"]
    assert round_build.report.joint_errors["neck_bridge"] == 0.0


def test_round_trip_and_tamper(round_build, tmp_path):
    path = tmp_path / "composite.json"
    round_build.composite.save(path)
    loaded = CompositeMetric.load(path)
    again = verify(loaded)
    assert again.to_dict() == round_build.report.to_dict()
    loaded.segment("tail")["mass"] = 0.56
    bad = verify(loaded)
    assert not bad.passed
    assert not bad.clauses["joints_continuous"]
    assert bad.joint_errors["bent_tail"] > 1e-8


def test_refined_verification(round_build):
    assert verify(round_build.composite, refine=2).passed


def test_deterministic(round_build):
    again = build(BuildConfig.from_dict(ROUND))
    assert again.report.to_dict() == round_build.report.to_dict()
    assert again.composite.to_dict() == round_build.composite.to_dict()


def test_below_threshold_rejected():
    cfg = dict(ROUND, mass=0.4995)
    with pytest.raises(PreconditionError, match="violated"):
        build(BuildConfig.from_dict(cfg))


def test_composite_document_validation():
    with pytest.raises(ValueError):
        CompositeMetric.from_dict({"segments": []})
