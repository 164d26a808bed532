from __future__ import annotations

import numpy as np
import pytest

from nuhlab.dynamics.maps import LinearAnosovMap
from nuhlab.errors import DomainError
from nuhlab.measures.histogram import (
    GridHistogram,
    birkhoff_average,
    cell_index,
    empirical_histogram,
    ensemble_histogram,
    l1_distance,
    marginal_wasserstein,
)
from nuhlab.measures.experiments import srb_reference
from nuhlab.noise.model import NoiseModel, RngStream, SeedPlan
from nuhlab.noise.orbits import random_orbit


def test_from_points_bins_rows_by_y() -> None:
    pts = [[0.1, 0.1], [0.6, 0.1], [0.6, 0.6], [0.6, 0.6]]
    hist = GridHistogram.from_points(pts, 2)
    np.testing.assert_allclose(hist.mass, [[0.25, 0.25], [0.0, 0.5]])


def test_cell_index_wraps_upper_edge() -> None:
    assert cell_index(np.array([[1.0, 0.0]]), 4).tolist() == [0]
    assert cell_index(np.array([[0.999, 0.999]]), 4).tolist() == [15]


@pytest.mark.parametrize(
    "n, mass",
    [
        (2, np.full((3, 3), 1.0 / 9.0)),
        (2, np.array([[1.5, -0.5], [0.0, 0.0]])),
        (2, np.full((2, 2), 0.3)),
    ],
)
def test_invalid_histograms_raise(n, mass) -> None:
    with pytest.raises(DomainError):
        GridHistogram(n, mass)


def test_empty_counts_raise() -> None:
    with pytest.raises(DomainError):
        GridHistogram.from_counts(np.zeros((4, 4)))


def test_frame_and_binary_layout() -> None:
    hist = GridHistogram.from_counts(np.arange(1.0, 10.0).reshape(3, 3))
    frame = hist.to_frame()
    assert list(frame.columns) == ["row", "col", "mass"]
    np.testing.assert_array_equal(GridHistogram.from_frame(frame).mass, hist.mass)

    payload = hist.to_bytes()
    assert len(payload) == 8 + 8 * 9
    assert int.from_bytes(payload[:8], "little") == 3
    np.testing.assert_array_equal(GridHistogram.from_bytes(payload).mass, hist.mass)
    with pytest.raises(DomainError):
        GridHistogram.from_bytes(payload[:-8])


def test_l1_distance() -> None:
    uniform = GridHistogram.uniform(4)
    delta = GridHistogram.from_points([[0.1, 0.1]], 4)
    assert l1_distance(uniform, delta) == pytest.approx(2.0 - 2.0 / 16.0)
    assert l1_distance(uniform, uniform) == 0.0
    with pytest.raises(DomainError):
        l1_distance(uniform, GridHistogram.uniform(2))


def test_marginal_wasserstein_sees_one_cell_shift() -> None:
    a = GridHistogram.from_points([[0.1, 0.1]], 4)
    b = GridHistogram.from_points([[0.3, 0.1]], 4)
    w_x, w_y = marginal_wasserstein(a, b)
    assert w_x == pytest.approx(0.25)
    assert w_y == pytest.approx(0.0)


def test_birkhoff_average_on_fixed_point() -> None:
    orbit = random_orbit(LinearAnosovMap(), NoiseModel(0.0), (0.0, 0.0), 20, RngStream(1))
    assert birkhoff_average(orbit, lambda p: np.cos(2.0 * np.pi * p[:, 0])) == pytest.approx(1.0)


def test_empirical_histogram_checks_burn_in() -> None:
    orbit = random_orbit(LinearAnosovMap(), NoiseModel(0.05), (0.2, 0.3), 20, RngStream(1))
    assert empirical_histogram([orbit], 4, 5).mass.sum() == pytest.approx(1.0)
    with pytest.raises(DomainError):
        empirical_histogram([orbit], 4, 21)


def test_noisy_cat_histogram_is_near_uniform_and_worker_independent() -> None:
    cat = LinearAnosovMap()
    plan = SeedPlan(12, streams=4)
    serial = ensemble_histogram(cat, NoiseModel(0.05), 20, 500, 50, [16, 8], plan)
    pooled = ensemble_histogram(cat, NoiseModel(0.05), 20, 500, 50, [8, 16], plan, workers=2)
    assert sorted(serial) == [8, 16]
    for g in (8, 16):
        np.testing.assert_array_equal(serial[g].mass, pooled[g].mass)
    assert l1_distance(serial[8], GridHistogram.uniform(8)) < 0.2


def test_ensemble_histogram_requires_steps_past_burn_in() -> None:
    with pytest.raises(DomainError):
        ensemble_histogram(LinearAnosovMap(), NoiseModel(0.05), 4, 50, 50, [8], SeedPlan(1))


def test_srb_reference_of_cat_map() -> None:
    refs = srb_reference(LinearAnosovMap(), 10, 600, 100, [8], SeedPlan(3, streams=2))
    assert l1_distance(refs[8], GridHistogram.uniform(8)) < 0.25
