from __future__ import annotations

import math

import numpy as np
import pytest

from nuhlab.cones.cones import ConeParams
from nuhlab.cones.directions import cocycle_log_norms
from nuhlab.dynamics.maps import DAParams, LinearAnosovMap, make_da_map
from nuhlab.errors import DomainError
from nuhlab.hyperbolic.curves import (
    IMAGE_FRACTION,
    MIN_LENGTH,
    DistortionReport,
    check_backward_contraction,
    check_delta1,
    check_distortion,
    cu_curve_for,
    curve_pushforward_density,
    distortion_bound,
    distortion_trend,
    evolve_curve,
)
from nuhlab.hyperbolic.times import choose_alpha, detect_hyperbolic_times
from nuhlab.noise.model import NoiseModel, RngStream
from nuhlab.noise.orbits import random_orbit

LAMBDA_U = (3.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture(scope="module")
def cat_setup():
    cat = LinearAnosovMap()
    orbit = random_orbit(cat, NoiseModel(0.01), (0.3, 0.6), 60, RngStream(8))
    return cat, orbit, cocycle_log_norms(cat, orbit, 0)


@pytest.fixture(scope="module")
def da_setup():
    da = make_da_map(DAParams())
    orbit = random_orbit(da, NoiseModel(0.02), (0.05, 0.02), 600, RngStream(13))
    trace = cocycle_log_norms(da, orbit, 0)
    alpha = choose_alpha(trace)
    times = detect_hyperbolic_times(trace, alpha).indices
    return da, orbit, trace, alpha, times


def test_curve_is_centred_on_the_orbit_point(cat_setup) -> None:
    cat, orbit, trace = cat_setup
    curve = cu_curve_for(orbit, trace, 20, 0.05, vertices=10)
    assert curve.vertices == 11
    np.testing.assert_array_equal(curve.points[5], orbit.points[curve.step])
    assert math.exp(curve.log_length) >= MIN_LENGTH * (1.0 - 1e-12)


def test_late_time_curve_materialises_after_step_zero(cat_setup) -> None:
    _, orbit, trace = cat_setup
    curve = cu_curve_for(orbit, trace, 50, 0.05)
    assert curve.step > 0
    # still tiny at the step it becomes resolvable
    assert math.exp(curve.log_length) < MIN_LENGTH * LAMBDA_U


@pytest.mark.parametrize(
    "hyp_time, delta1, vertices",
    [(0, 0.05, 81), (61, 0.05, 81), (10, 0.0, 81), (10, 0.05, 2)],
)
def test_cu_curve_arguments_are_validated(cat_setup, hyp_time, delta1, vertices) -> None:
    _, orbit, trace = cat_setup
    with pytest.raises(DomainError):
        cu_curve_for(orbit, trace, hyp_time, delta1, vertices=vertices)


def test_settled_trace_is_rejected(cat_setup) -> None:
    cat, orbit, _ = cat_setup
    with pytest.raises(DomainError):
        cu_curve_for(orbit, cocycle_log_norms(cat, orbit, 5), 10, 0.05)


def test_cat_image_reaches_target_length(cat_setup) -> None:
    cat, orbit, trace = cat_setup
    evo = evolve_curve(cat, orbit, trace, 40, 0.05)
    assert math.exp(evo.log_lengths[-1]) == pytest.approx(IMAGE_FRACTION * 0.05, rel=1e-6)
    assert np.diff(evo.log_lengths) == pytest.approx(np.full(40, math.log(LAMBDA_U)), rel=1e-6)


def test_cat_backward_contraction_is_exact(cat_setup) -> None:
    cat, orbit, trace = cat_setup
    report = check_backward_contraction(cat, orbit, trace, 30, 0.05, 0.5)
    k = np.arange(31)
    assert report.ratios == pytest.approx(LAMBDA_U ** (-k), rel=1e-6)
    assert report.passed
    assert report.to_dict()["worst_ratio_over_bound"] < 1.0


def test_cat_distortion_is_trivial(cat_setup) -> None:
    cat, orbit, trace = cat_setup
    report = check_distortion(cat, orbit, trace, 25, 0.05, 1.1)
    assert report.max_ratio == pytest.approx(1.0, abs=1e-9)
    assert report.pairs_checked > 0
    assert report.passed


def test_cat_distortion_bound_is_one() -> None:
    cat = LinearAnosovMap()
    cone = ConeParams.for_splitting(cat.splitting, 0.4)
    assert distortion_bound(cat, cone, 0.05, 0.5, grid_n=32) == 1.0


def test_da_contraction_at_hyperbolic_times(da_setup) -> None:
    da, orbit, trace, alpha, times = da_setup
    cone = ConeParams.for_splitting(da.splitting, 0.4)
    picked = times[np.linspace(0, times.size - 1, 8).astype(int)]
    for n in picked:
        report = check_backward_contraction(da, orbit, trace, int(n), 0.02, alpha, cone=cone)
        assert report.passed, report.to_dict()


def test_da_distortion_within_a_priori_bound(da_setup) -> None:
    da, orbit, trace, alpha, times = da_setup
    cone = ConeParams.for_splitting(da.splitting, 0.4)
    c2 = distortion_bound(da, cone, 0.05, alpha)
    assert c2 > 1.0
    late = times[times >= 50][:5]
    for n in late:
        report = check_distortion(da, orbit, trace, int(n), 0.05, c2, cone=cone)
        assert report.passed, report.to_dict()


def test_pushforward_density_of_straight_image_is_uniform(cat_setup) -> None:
    cat, orbit, trace = cat_setup
    out = curve_pushforward_density(
        cat, orbit, trace, np.array([20, 30]), 0.05, grid_1d=8, c2_constant=1.1
    )
    assert [p.hyp_time for p in out] == [20, 30]
    for p in out:
        assert p.density_ratio == pytest.approx(1.0, abs=1e-6)
        assert p.bound == pytest.approx(1.21)
        assert p.passed


def test_delta1_check_on_cat_map() -> None:
    cat = LinearAnosovMap()
    cone = ConeParams.for_splitting(cat.splitting, 0.4)
    report = check_delta1(cat, cone, 0.5, 0.05, 1000, RngStream(2))
    assert report.max_ratio == pytest.approx(1.0, abs=1e-9)
    assert report.passed
    assert report.to_dict()["samples"] == 1000


def test_distortion_trend() -> None:
    reports = [DistortionReport(2.0, 1.0 + 0.01 * n, 10, 0.05, n) for n in (10, 20, 30, 40)]
    trend = distortion_trend(reports)
    assert trend["slope"] == pytest.approx(0.01)
    assert trend["ci_low"] <= trend["slope"] <= trend["ci_high"]
    assert trend["points"] == 4

    short = distortion_trend(reports[:2])
    assert short["slope"] == 0.0
    assert short["ci_low"] == -math.inf
