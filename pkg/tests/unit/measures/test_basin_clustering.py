from __future__ import annotations

import numpy as np
import pytest

from nuhlab.dynamics.fixtures import TwoAttractorMap
from nuhlab.dynamics.maps import LinearAnosovMap
from nuhlab.errors import DomainError
from nuhlab.measures.basins import cluster_basins, cluster_labels, fourier_features, fourier_labels
from nuhlab.noise.model import NoiseModel, SeedPlan


def test_fourier_observables() -> None:
    assert fourier_labels(1) == ["cos1x", "sin1x", "cos1y", "sin1y"]
    assert len(fourier_labels(3)) == 12
    feats = fourier_features(np.array([[0.0, 0.25]]), 2)
    np.testing.assert_allclose(feats[0], [1, 0, 0, 1, 1, 0, -1, 0], atol=1e-12)


def test_labels_follow_first_appearance() -> None:
    averages = np.array([[1.0, 1.0], [0.0, 0.0], [0.01, 0.0]])
    assert cluster_labels(averages, 0.1).tolist() == [1, 2, 2]
    assert cluster_labels(averages[:1], 0.1).tolist() == [1]


def test_two_attractor_map_has_two_basins() -> None:
    report = cluster_basins(
        TwoAttractorMap(), NoiseModel(0.05), 20, 2000, 2, 0.1, SeedPlan(5, streams=2), burn_in=100
    )
    assert report.clusters == 2
    assert sum(report.cluster_sizes()) == 20
    assert report.centroids.shape == (2, 8)
    summary = report.to_dict()
    assert summary["observables"] == fourier_labels(2)
    assert summary["burn_in"] == 100


def test_noisy_cat_map_has_one_basin() -> None:
    report = cluster_basins(
        LinearAnosovMap(), NoiseModel(0.05), 12, 3000, 2, 0.25, SeedPlan(6, streams=3), burn_in=100
    )
    assert report.clusters == 1
    assert report.cluster_sizes() == [12]


@pytest.mark.parametrize(
    "ensemble, n_steps, modes, threshold, burn_in",
    [(4, 100, 1, 0.1, 0), (0, 100, 2, 0.1, 0), (4, 100, 2, 0.1, 100), (4, 100, 2, 0.0, 0)],
)
def test_arguments_are_validated(ensemble, n_steps, modes, threshold, burn_in) -> None:
    with pytest.raises(DomainError):
        cluster_basins(
            TwoAttractorMap(), NoiseModel(0.05), ensemble, n_steps, modes, threshold, SeedPlan(1), burn_in=burn_in
        )
