"""Hyperbolic-time detection along cocycle traces and ensemble density estimates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..cones.directions import DEFAULT_SETTLE, CocycleTrace, ensemble_cocycle_steps
from ..dynamics.maps import TorusMap
from ..ensemble import StreamJob, plan_jobs, run_streams
from ..errors import DomainError
from ..noise.model import NoiseModel, SeedPlan
from ..noise.orbits import ensemble_starts
from .pliss import select_indices

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HyperbolicTimeReport:
    """``indices`` are 1-based trace positions; orbit step is ``start + n``."""

    alpha: float
    indices: NDArray[np.int64]
    density: float
    gamma_bound: float
    start: int = 0
    length: int = 0

    def orbit_indices(self) -> NDArray[np.int64]:
        return self.indices + self.start

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": self.indices})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "count": int(self.indices.size),
            "density": self.density,
            "gamma_bound": self.gamma_bound,
            "start": self.start,
            "length": self.length,
        }


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def detect_hyperbolic_times(trace: CocycleTrace, alpha: float) -> HyperbolicTimeReport:
    """``n`` is hyperbolic iff ``sum_{j=n-k+1}^{n} a_j <= k log(alpha)`` for all ``k``."""

    _check_alpha(alpha)
    if len(trace) == 0:
        raise DomainError("cannot detect hyperbolic times on an empty trace")
    gains = -trace.log_norms
    c1 = -math.log(alpha)
    indices = select_indices(gains, c1)
    c2 = float(gains.mean())
    top = float(gains.max())
    gamma = (c2 - c1) / (top - c1) if c2 > c1 and top > c1 else 0.0
    return HyperbolicTimeReport(
        alpha=alpha,
        indices=indices,
        density=indices.size / gains.size,
        gamma_bound=gamma,
        start=trace.start,
        length=len(trace),
    )


def verify_hyperbolic_time(
    log_norms: NDArray[np.float64], n: int, alpha: float, tol: float = 1e-12
) -> bool:
    """Replay the definition at ``n``: every backward partial sum is ``<= k log alpha``."""

    if not (1 <= n <= log_norms.size):
        raise DomainError(f"index {n} outside trace of length {log_norms.size}")
    window = log_norms[:n][::-1]
    partial = np.cumsum(window)
    k = np.arange(1, n + 1)
    return bool(np.all(partial <= k * math.log(alpha) + tol))


def choose_alpha(trace: CocycleTrace, safety: float = 4.0) -> float:
    """``alpha = exp(-c / safety)`` with ``c = -mean(a_j)`` the measured expansion."""
    c = -trace.mean
    if not c > 0.0:
        raise DomainError(f"trace shows no mean expansion (mean a_j = {trace.mean})")
    return math.exp(-c / safety)


@dataclass(frozen=True, eq=False)
class DensityStatistics:
    alpha: float
    densities: NDArray[np.float64]

    @property
    def q05(self) -> float:
        return float(np.quantile(self.densities, 0.05))

    def to_dict(self) -> Dict[str, Any]:
        quantiles = np.quantile(self.densities, [0.05, 0.25, 0.5, 0.75, 0.95])
        return {
            "alpha": self.alpha,
            "orbits": int(self.densities.size),
            "mean": float(self.densities.mean()),
            "min": float(self.densities.min()),
            "max": float(self.densities.max()),
            "q05": float(quantiles[0]),
            "q25": float(quantiles[1]),
            "median": float(quantiles[2]),
            "q75": float(quantiles[3]),
            "q95": float(quantiles[4]),
        }


def _density_chunk(job: StreamJob) -> NDArray[np.float64]:
    p = job.params
    rng = job.rng()
    starts = ensemble_starts(rng, job.size)
    c1 = -math.log(p["alpha"])
    prefix = np.zeros(job.size)
    running_max = np.zeros(job.size)
    counts = np.zeros(job.size)
    for _, _, a in ensemble_cocycle_steps(
        p["map"], p["model"], starts, p["n"], p["settle"], rng
    ):
        prefix += -a - c1
        counts += prefix >= running_max
        np.maximum(running_max, prefix, out=running_max)
    return counts / (p["n"] - p["settle"])


def estimate_density(
    map_: TorusMap,
    model: NoiseModel,
    ensemble: int,
    n: int,
    alpha: float,
    plan: SeedPlan,
    *,
    settle: int = DEFAULT_SETTLE,
    workers: int = 1,
) -> DensityStatistics:
    """Per-orbit hyperbolic-time density over Lebesgue-random starts."""

    _check_alpha(alpha)
    if ensemble < 1 or n < 100 or n <= settle:
        raise DomainError(f"need ensemble >= 1 and n >= 100, got {ensemble}, {n}")
    jobs = plan_jobs(
        plan, ensemble, map=map_, model=model, n=n, alpha=alpha, settle=settle
    )
    parts: List[NDArray[np.float64]] = run_streams(_density_chunk, jobs, workers)
    stats = DensityStatistics(alpha, np.concatenate(parts))
    _LOGGER.info(
        "hyperbolic_density orbits=%d n=%d alpha=%.6f q05=%.4f",
        ensemble,
        n,
        alpha,
        stats.q05,
    )
    return stats


__all__ = [
    "DensityStatistics",
    "HyperbolicTimeReport",
    "choose_alpha",
    "detect_hyperbolic_times",
    "estimate_density",
    "verify_hyperbolic_time",
]
