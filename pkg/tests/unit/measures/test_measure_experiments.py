from __future__ import annotations

import math

import numpy as np
import pytest

from nuhlab.dynamics.maps import DAParams, LinearAnosovMap, make_da_map
from nuhlab.errors import DomainError
from nuhlab.measures.experiments import (
    FrequencyResult,
    RnueResult,
    StabilityCurve,
    StabilityPoint,
    frequency_experiment,
    rnue_experiment,
    stability_curve,
)
from nuhlab.measures.histogram import GridHistogram
from nuhlab.noise.model import NoiseModel, SeedPlan

LOG_LAMBDA_U = math.log((3.0 + math.sqrt(5.0)) / 2.0)


def _point(epsilon: float, l1: float) -> StabilityPoint:
    return StabilityPoint(epsilon, l1, 10, 100, 0.0, 0.0)


def test_cat_rnue_averages_are_the_unstable_exponent() -> None:
    result = rnue_experiment(
        LinearAnosovMap(),
        NoiseModel(0.02),
        8,
        400,
        SeedPlan(2, streams=2),
        settle=30,
        checkpoints=(100, 300, 1000),
        cs_orbits=2,
    )
    assert result.checkpoints == [100, 300, 400]
    np.testing.assert_allclose(result.values, -LOG_LAMBDA_U, rtol=1e-9)
    assert result.all_negative
    assert result.fail_c == pytest.approx(0.95 * LOG_LAMBDA_U)
    assert result.failing_fractions() == [0.0, 0.0, 0.0]
    assert result.fail_slope == 0.0
    np.testing.assert_allclose(result.cs_means, -LOG_LAMBDA_U, rtol=1e-9)
    assert list(result.to_frame().columns) == ["n", "failing_fraction"]


def test_da_rnue_is_expanding_on_average() -> None:
    result = rnue_experiment(
        make_da_map(DAParams()),
        NoiseModel(0.02),
        16,
        500,
        SeedPlan(3, streams=4),
        checkpoints=(100, 500),
        workers=2,
    )
    summary = result.to_dict()
    assert summary["ensemble"] == 16
    assert summary["mean"] < 0.0
    assert summary["cs_mean"] is None
    assert set(summary["fraction_above"]) == {repr(c) for c in result.c_ladder}


def test_failing_fraction_slope_sign() -> None:
    values = np.array([[-0.1, -0.5], [-0.1, -0.5], [-0.5, -0.5], [-0.5, -0.5]])
    result = RnueResult(values[:, -1], [100, 1000], values, [0.0], fail_c=0.2)
    assert result.failing_fractions() == [0.5, 0.0]
    assert result.fail_slope < 0.0


def test_rnue_rejects_short_runs() -> None:
    with pytest.raises(DomainError):
        rnue_experiment(LinearAnosovMap(), NoiseModel(0.02), 4, 30, SeedPlan(1), settle=30)


def test_cat_occupancy_matches_lebesgue_measure() -> None:
    result = frequency_experiment(
        LinearAnosovMap(),
        NoiseModel(0.02),
        (0.0, 0.0),
        0.1,
        16,
        [1000, 100],
        SeedPlan(8, streams=2),
    )
    assert result.n_ladder == [100, 1000]
    assert result.mean_fractions()[-1] == pytest.approx(1.0 - math.pi * 0.01, abs=0.02)
    assert result.zeta_bad == pytest.approx(0.9 * result.zeta)
    assert list(result.to_frame().columns) == ["n", "mean_fraction", "q05_fraction", "bad_fraction"]


def test_frequency_is_worker_independent() -> None:
    args = (make_da_map(DAParams()), NoiseModel(0.02), (0.0, 0.0), 0.12, 12, [50, 200], SeedPlan(9, streams=3))
    serial = frequency_experiment(*args, zeta_bad=0.5)
    pooled = frequency_experiment(*args, zeta_bad=0.5, workers=3)
    np.testing.assert_array_equal(serial.fractions, pooled.fractions)
    assert serial.zeta_bad == 0.5


def test_bad_fractions_use_threshold() -> None:
    fractions = np.array([[0.2, 0.6], [0.8, 0.9]])
    result = FrequencyResult([10, 100], fractions, zeta=0.6, zeta_bad=0.5)
    assert result.bad_fractions() == [0.5, 0.0]
    assert result.bad_slope < 0.0


@pytest.mark.parametrize(
    "ladder, radius, ensemble",
    [([], 0.1, 4), ([0, 10], 0.1, 4), ([10], -0.1, 4), ([10], 0.1, 0)],
)
def test_frequency_arguments_are_validated(ladder, radius, ensemble) -> None:
    with pytest.raises(DomainError):
        frequency_experiment(LinearAnosovMap(), NoiseModel(0.02), (0, 0), radius, ensemble, ladder, SeedPlan(1))


def test_stability_curve_on_cat_map() -> None:
    curve = stability_curve(
        LinearAnosovMap(),
        [0.1, 0.05],
        GridHistogram.uniform(8),
        ensemble=10,
        n_steps=600,
        burn_in=100,
        plan=SeedPlan(4, streams=2),
        refinement_references={16: GridHistogram.uniform(16)},
        ulam_samples=16,
    )
    assert [p.epsilon for p in curve.points] == [0.1, 0.05]
    assert curve.max_l1 < 0.3
    assert list(curve.refinement) == [16]
    assert all(p.ulam_l1 is not None and p.ulam_l1 < 1e-6 for p in curve.points)
    assert list(curve.to_frame().columns) == ["epsilon", "l1_distance", "orbit_count", "steps"]
    assert curve.to_dict()["refinement"].keys() == {"16"}


def test_stability_ladder_must_descend() -> None:
    with pytest.raises(DomainError):
        stability_curve(
            LinearAnosovMap(),
            [0.05, 0.1],
            GridHistogram.uniform(8),
            ensemble=2,
            n_steps=200,
            burn_in=10,
            plan=SeedPlan(1),
        )


def test_nonincreasing_allows_band() -> None:
    assert StabilityCurve([_point(0.1, 0.30), _point(0.05, 0.31), _point(0.02, 0.2)], 8).nonincreasing()
    assert not StabilityCurve([_point(0.1, 0.30), _point(0.05, 0.35)], 8).nonincreasing()
