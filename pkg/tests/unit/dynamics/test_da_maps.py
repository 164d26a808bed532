from __future__ import annotations

import math

import numpy as np
import pytest

from nuhlab.dynamics.maps import (
    CAT_MAP,
    DAParams,
    LinearAnosovMap,
    inv2,
    make_da_map,
)
from nuhlab.dynamics.torus import Mat2, TorusPoint, torus_delta, wrap
from nuhlab.errors import ConstructionError

LAMBDA_MAX = (3.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture(scope="module")
def da_map():
    return make_da_map(DAParams())


def _random_points(count: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(count, 2))


def test_cat_map_splitting_matches_hand_eigendecomposition() -> None:
    splitting = LinearAnosovMap().splitting
    assert splitting.lambda_u == pytest.approx(LAMBDA_MAX, abs=1e-12)
    assert splitting.lambda_s == pytest.approx(1.0 / LAMBDA_MAX, abs=1e-12)
    assert CAT_MAP.as_array() @ splitting.e_u == pytest.approx(LAMBDA_MAX * splitting.e_u)
    assert float(splitting.e_u @ splitting.e_s) == pytest.approx(0.0, abs=1e-12)


def test_strength_zero_matches_linear_map_bitwise() -> None:
    da = make_da_map(DAParams(strength=0.0))
    linear = LinearAnosovMap()
    pts = _random_points(2000)
    assert np.array_equal(da.apply_lift(pts), linear.apply_lift(pts))
    assert np.array_equal(da.inverse_apply(pts), linear.inverse_apply(pts))


def test_map_is_linear_outside_region(da_map) -> None:
    pts = _random_points(5000, seed=1)
    far = pts[~da_map.in_region(pts)]
    linear = LinearAnosovMap()
    assert np.allclose(da_map.apply(far), linear.apply(far), atol=0.0, rtol=0.0)
    assert np.allclose(da_map.jacobian(far), CAT_MAP.as_array(), atol=0.0)


def test_expansion_along_e_u_at_the_fixed_point(da_map) -> None:
    e_u = da_map.splitting.e_u
    image = da_map.jacobian(np.zeros(2)) @ e_u
    assert float(image @ e_u) == pytest.approx(0.37 * LAMBDA_MAX, abs=1e-12)


def test_jacobian_matches_central_finite_differences(da_map) -> None:
    rng = np.random.default_rng(2)
    # half the points inside V so the shear is exercised
    inside = rng.uniform(-0.12, 0.12, size=(500, 2))
    pts = np.vstack([inside, _random_points(500, seed=3)])
    h = 1e-6
    analytic = da_map.jacobian(pts)
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        fd = (da_map.apply_lift(pts + step) - da_map.apply_lift(pts - step)) / (2 * h)
        assert np.max(np.abs(fd - analytic[:, :, k])) <= 1e-6


def test_inverse_round_trips_both_orders(da_map) -> None:
    pts = np.vstack(
        [_random_points(10_000, seed=4), np.random.default_rng(5).uniform(-0.12, 0.12, (2000, 2))]
    )
    forward = da_map.apply(da_map.inverse_apply(pts))
    backward = da_map.inverse_apply(da_map.apply(pts))
    assert np.max(np.abs(torus_delta(pts, forward))) <= 1e-10
    assert np.max(np.abs(torus_delta(wrap(pts), backward))) <= 1e-10


def test_linear_inverse_uses_inverse_matrix() -> None:
    linear = LinearAnosovMap()
    p = np.array([0.3, 0.6])
    expected = wrap(np.array([[1.0, -1.0], [-1.0, 2.0]]) @ p)
    assert linear.inverse_apply(p) == pytest.approx(expected, abs=1e-15)


def test_displace_agrees_with_direct_difference(da_map) -> None:
    rng = np.random.default_rng(6)
    anchors = rng.uniform(-0.15, 0.15, size=(1000, 2))
    d = rng.normal(scale=1e-3, size=(1000, 2))
    direct = da_map.apply_lift(anchors + d) - da_map.apply_lift(anchors)
    assert np.max(np.abs(da_map.displace(anchors, d) - direct)) <= 1e-12


def test_displace_keeps_precision_for_tiny_offsets(da_map) -> None:
    anchor = np.array([0.03, -0.02])
    d = 1e-13 * da_map.splitting.e_u
    linearised = da_map.jacobian(anchor) @ d
    assert da_map.displace(anchor, d) == pytest.approx(linearised, rel=1e-6)


def test_batched_inverse_undoes_the_jacobian(da_map) -> None:
    pts = np.random.default_rng(7).uniform(-0.1, 0.1, size=(100, 2))
    prod = inv2(da_map.jacobian(pts)) @ da_map.jacobian(pts)
    assert np.allclose(prod, np.eye(2), atol=1e-12)


def test_params_round_trip_through_json_layout() -> None:
    params = DAParams(center=TorusPoint(0.25, 0.5), radius=0.1, strength=0.4)
    assert DAParams.from_dict(params.to_dict()) == params
    assert params.to_dict()["base"] == [2, 1, 1, 1]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"strength": 1.0},
        {"strength": -0.1},
        {"radius": 0.5},
        {"radius": 0.0},
        {"base": Mat2(2.0, 1.0, 1.0, 2.0)},
        {"base": Mat2(1.0, 1.0, 0.0, 1.0)},
        {"base": Mat2(2.5, 1.0, 1.0, 1.0)},
    ],
)
def test_invalid_params_are_rejected(kwargs) -> None:
    with pytest.raises(ConstructionError):
        DAParams(**kwargs)


def test_describe_reports_kind(da_map) -> None:
    assert da_map.describe()["kind"] == "da"
    assert LinearAnosovMap().describe() == {"kind": "linear", "base": [2.0, 1.0, 1.0, 1.0]}
