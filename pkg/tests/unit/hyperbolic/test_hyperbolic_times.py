from __future__ import annotations

import math

import numpy as np
import pytest

from nuhlab.cones.directions import CocycleTrace, cocycle_log_norms
from nuhlab.dynamics.maps import DAParams, LinearAnosovMap, make_da_map
from nuhlab.errors import DomainError
from nuhlab.hyperbolic.times import (
    choose_alpha,
    detect_hyperbolic_times,
    estimate_density,
    verify_hyperbolic_time,
)
from nuhlab.noise.model import NoiseModel, RngStream, SeedPlan
from nuhlab.noise.orbits import ensemble_starts, random_orbit

LOG_LAMBDA_U = math.log((3.0 + math.sqrt(5.0)) / 2.0)


@pytest.fixture(scope="module")
def da_map():
    return make_da_map(DAParams())


@pytest.fixture(scope="module")
def da_trace(da_map):
    orbit = random_orbit(da_map, NoiseModel(0.02), (0.41, 0.13), 2000, RngStream(5))
    return cocycle_log_norms(da_map, orbit, 30)


def test_cat_map_every_step_is_hyperbolic() -> None:
    cat = LinearAnosovMap()
    orbit = random_orbit(cat, NoiseModel(0.01), (0.2, 0.7), 200, RngStream(3))
    trace = cocycle_log_norms(cat, orbit, 10)
    report = detect_hyperbolic_times(trace, 0.5)
    assert report.indices.tolist() == list(range(1, len(trace) + 1))
    assert report.density == 1.0
    assert report.gamma_bound == pytest.approx(1.0)
    assert report.orbit_indices()[0] == 11


def test_choose_alpha_from_mean_expansion() -> None:
    cat = LinearAnosovMap()
    orbit = random_orbit(cat, NoiseModel(0.0), (0.2, 0.7), 50, RngStream(3))
    trace = cocycle_log_norms(cat, orbit, 5)
    assert choose_alpha(trace, safety=4.0) == pytest.approx(math.exp(-LOG_LAMBDA_U / 4.0))


def test_choose_alpha_rejects_non_expanding_trace() -> None:
    trace = CocycleTrace(0, np.array([0.1, 0.2]), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        choose_alpha(trace)


def test_detected_times_replay_the_definition(da_trace) -> None:
    alpha = choose_alpha(da_trace)
    report = detect_hyperbolic_times(da_trace, alpha)
    selected = set(report.indices.tolist())
    assert selected
    for n in range(1, len(da_trace) + 1):
        assert verify_hyperbolic_time(da_trace.log_norms, n, alpha) == (n in selected)


def test_stricter_alpha_selects_a_subset(da_trace) -> None:
    alpha = choose_alpha(da_trace)
    loose = set(detect_hyperbolic_times(da_trace, alpha).indices.tolist())
    strict = set(detect_hyperbolic_times(da_trace, math.sqrt(alpha) * alpha).indices.tolist())
    assert strict <= loose


def test_report_frame_and_dict(da_trace) -> None:
    report = detect_hyperbolic_times(da_trace, choose_alpha(da_trace))
    assert list(report.to_frame().columns) == ["n"]
    summary = report.to_dict()
    assert summary["count"] == report.indices.size
    assert summary["start"] == 30
    assert summary["length"] == len(da_trace)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
def test_alpha_outside_unit_interval_raises(da_trace, alpha) -> None:
    with pytest.raises(DomainError):
        detect_hyperbolic_times(da_trace, alpha)


def test_empty_trace_raises() -> None:
    with pytest.raises(DomainError):
        detect_hyperbolic_times(CocycleTrace(0, np.empty(0), np.empty((0, 2))), 0.5)


def test_verify_rejects_out_of_range_index() -> None:
    with pytest.raises(DomainError):
        verify_hyperbolic_time(np.array([-1.0, -1.0]), 3, 0.5)


def test_density_estimate_matches_stored_orbit_for_single_member(da_map) -> None:
    model = NoiseModel(0.02)
    plan = SeedPlan(99, streams=1)
    stats = estimate_density(da_map, model, 1, 300, 0.9, plan, settle=30)

    rng = plan.stream(0)
    start = ensemble_starts(rng, 1)[0]
    orbit = random_orbit(da_map, model, start, 300, rng)
    trace = cocycle_log_norms(da_map, orbit, 30)
    expected = detect_hyperbolic_times(trace, 0.9).density
    assert stats.densities[0] == pytest.approx(expected, abs=1e-12)


def test_density_estimate_positive_and_worker_independent(da_map) -> None:
    model = NoiseModel(0.02)
    plan = SeedPlan(4, streams=3)
    serial = estimate_density(da_map, model, 9, 400, 0.9, plan, settle=30, workers=1)
    pooled = estimate_density(da_map, model, 9, 400, 0.9, plan, settle=30, workers=2)
    np.testing.assert_array_equal(serial.densities, pooled.densities)
    assert serial.q05 > 0.0
    summary = serial.to_dict()
    assert summary["orbits"] == 9
    assert summary["min"] <= summary["median"] <= summary["max"]


def test_density_estimate_rejects_short_orbits(da_map) -> None:
    with pytest.raises(DomainError):
        estimate_density(da_map, NoiseModel(0.02), 4, 50, 0.9, SeedPlan(1), settle=10)


@pytest.mark.slow
def test_detection_replays_the_definition_on_many_traces(da_map) -> None:
    model = NoiseModel(0.01)
    rng = SeedPlan(17, streams=1).stream(0)
    for start in ensemble_starts(rng, 100):
        orbit = random_orbit(da_map, model, start, 1000, rng)
        trace = cocycle_log_norms(da_map, orbit, 30)
        alpha = choose_alpha(trace)
        selected = set(detect_hyperbolic_times(trace, alpha).indices.tolist())
        assert selected
        for n in range(1, len(trace) + 1):
            assert verify_hyperbolic_time(trace.log_norms, n, alpha) == (n in selected)
