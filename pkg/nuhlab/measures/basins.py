"""Counting random physical measures by clustering Fourier Birkhoff averages."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from ..dynamics.maps import SelfMap
from ..dynamics.torus import FloatArray
from ..ensemble import StreamJob, plan_jobs, run_streams
from ..errors import DomainError
from ..noise.model import NoiseModel, SeedPlan
from ..noise.orbits import ensemble_starts, ensemble_steps

_LOGGER = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.1


def fourier_labels(modes: int) -> List[str]:
    labels: List[str] = []
    for k in range(1, modes + 1):
        labels += [f"cos{k}x", f"sin{k}x", f"cos{k}y", f"sin{k}y"]
    return labels


def fourier_features(points: FloatArray, modes: int) -> FloatArray:
    """``(N, 4*modes)`` values of the observables in :func:`fourier_labels` order."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    k = np.arange(1, modes + 1)
    ax = 2.0 * np.pi * pts[:, :1] * k
    ay = 2.0 * np.pi * pts[:, 1:] * k
    stacked = np.stack([np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay)], axis=-1)
    return stacked.reshape(pts.shape[0], 4 * modes)


@dataclass(frozen=True, eq=False)
class BasinReport:
    observables: List[str]
    averages: FloatArray
    clusters: int
    assignments: np.ndarray
    threshold: float
    burn_in: int = 0
    centroids: FloatArray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self) -> None:
        if not 1 <= self.clusters <= max(1, self.averages.shape[0]):
            raise DomainError(f"cluster count {self.clusters} out of range")

    def cluster_sizes(self) -> List[int]:
        return [int(np.sum(self.assignments == c)) for c in range(1, self.clusters + 1)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "clusters": self.clusters,
            "cluster_sizes": self.cluster_sizes(),
            "threshold": self.threshold,
            "burn_in": self.burn_in,
            "observables": list(self.observables),
            "centroids": self.centroids.tolist(),
        }


def _basin_chunk(job: StreamJob) -> FloatArray:
    p = job.params
    rng = job.rng()
    starts = ensemble_starts(rng, job.size)
    total = np.zeros((job.size, 4 * p["modes"]))
    for j, x in ensemble_steps(p["map"], p["model"], starts, p["n_steps"], rng):
        if p["burn_in"] <= j < p["n_steps"]:
            total += fourier_features(x, p["modes"])
    return total / (p["n_steps"] - p["burn_in"])


def cluster_labels(averages: FloatArray, threshold: float) -> np.ndarray:
    """Single-linkage labels ``1..k`` cutting the dendrogram at ``threshold``."""
    if averages.shape[0] == 1:
        return np.ones(1, dtype=int)
    tree = linkage(averages, method="single", metric="euclidean")
    raw = fcluster(tree, t=threshold, criterion="distance")
    # relabel by first appearance so labels do not depend on scipy's ordering
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse] + 1


def cluster_basins(
    map_: SelfMap,
    model: NoiseModel,
    ensemble: int,
    n_steps: int,
    modes: int,
    threshold: float,
    plan: SeedPlan,
    *,
    burn_in: int = 0,
    workers: int = 1,
) -> BasinReport:
    if modes < 2:
        raise DomainError(f"modes must be >= 2, got {modes}")
    if ensemble < 1:
        raise DomainError(f"ensemble must be >= 1, got {ensemble}")
    if n_steps <= burn_in:
        raise DomainError(f"n_steps={n_steps} must exceed burn_in={burn_in}")
    if threshold <= 0.0:
        raise DomainError(f"threshold must be > 0, got {threshold}")

    jobs = plan_jobs(plan, ensemble, map=map_, model=model, n_steps=n_steps, burn_in=burn_in, modes=modes)
    averages = np.vstack(run_streams(_basin_chunk, jobs, workers))
    labels = cluster_labels(averages, threshold)
    clusters = int(labels.max())
    centroids = np.vstack([averages[labels == c].mean(axis=0) for c in range(1, clusters + 1)])
    _LOGGER.info(
        "cluster_basins epsilon=%s orbits=%d clusters=%d threshold=%s",
        model.epsilon,
        ensemble,
        clusters,
        threshold,
    )
    return BasinReport(
        observables=fourier_labels(modes),
        averages=averages,
        clusters=clusters,
        assignments=labels,
        threshold=threshold,
        burn_in=burn_in,
        centroids=centroids,
    )


__all__ = [
    "BasinReport",
    "DEFAULT_THRESHOLD",
    "cluster_basins",
    "cluster_labels",
    "fourier_features",
    "fourier_labels",
]
