"""Random orbits of the skew product ``x -> f(x) + t`` and ensemble stepping."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from ..dynamics.maps import TorusMap
from ..dynamics.torus import FloatArray, as_points, torus_delta, wrap
from ..errors import DomainError
from .model import NoiseModel, RngStream, sample_noise

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RandomOrbit:
    """``points[j + 1] = wrap(f(points[j]) + noises[j + 1])``; ``noises[0] = 0``."""

    points: FloatArray
    noises: FloatArray

    def __post_init__(self) -> None:
        if self.points.shape != self.noises.shape or self.points.ndim != 2:
            raise DomainError(
                f"orbit arrays disagree points={self.points.shape} noises={self.noises.shape}"
            )

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1

    def __len__(self) -> int:
        return self.points.shape[0]

    def replay(self, map_: TorusMap) -> FloatArray:
        """Recompute the orbit from its start point and stored noises."""
        out = np.empty_like(self.points)
        out[0] = self.points[0]
        for j in range(self.steps):
            out[j + 1] = wrap(map_.apply(out[j : j + 1])[0] + self.noises[j + 1])
        return out


def random_orbit(
    map_: TorusMap, model: NoiseModel, x0: ArrayLike, n: int, rng: RngStream
) -> RandomOrbit:
    if n < 1:
        raise DomainError(f"orbit length must be >= 1, got {n}")
    start = wrap(x0).reshape(2)
    noises = np.zeros((n + 1, 2))
    noises[1:] = sample_noise(model, rng, size=n)
    points = np.empty((n + 1, 2))
    points[0] = start
    # one-row batches keep the arithmetic identical to ensemble_steps
    for j in range(n):
        points[j + 1] = wrap(map_.apply(points[j : j + 1])[0] + noises[j + 1])
    return RandomOrbit(points, noises)


def ensemble_starts(rng: RngStream, size: int) -> FloatArray:
    """Lebesgue-random initial conditions."""
    return wrap(rng.random((size, 2)))


def ensemble_steps(
    map_: TorusMap, model: NoiseModel, x0: ArrayLike, n: int, rng: RngStream
) -> Iterator[Tuple[int, FloatArray]]:
    """Yield ``(j, points_j)`` for ``j = 0..n`` advancing all orbits together.

    Each step draws one noise vector per orbit, so an ensemble of size one
    reproduces :func:`random_orbit` with the same stream.
    """

    x = wrap(x0)
    yield 0, x
    size = x.shape[0]
    for j in range(1, n + 1):
        x = wrap(map_.apply(x) + sample_noise(model, rng, size=size))
        yield j, x


def orbit_frame(orbit: RandomOrbit) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "step": np.arange(len(orbit)),
            "x": orbit.points[:, 0],
            "y": orbit.points[:, 1],
            "tx": orbit.noises[:, 0],
            "ty": orbit.noises[:, 1],
        }
    )


@dataclass(frozen=True)
class NondegeneracyReport:
    epsilon: float
    samples: int
    xi: float
    xi_ratio: float
    max_density: float
    density_bound: float
    covers_ball: bool
    bounded_density: bool

    @property
    def passed(self) -> bool:
        return self.covers_ball and self.bounded_density

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "samples": self.samples,
            "xi": self.xi,
            "xi_ratio": self.xi_ratio,
            "max_density": self.max_density,
            "density_bound": self.density_bound,
            "covers_ball": self.covers_ball,
            "bounded_density": self.bounded_density,
        }


def check_nondegeneracy(
    map_: TorusMap,
    model: NoiseModel,
    x: ArrayLike,
    samples: int,
    rng: RngStream,
    *,
    grid: int = 64,
    density_grid: int = 8,
    coverage_ratio: float = 0.9,
    density_slack: float = 0.1,
) -> NondegeneracyReport:
    """Monte-Carlo evidence for the two non-degeneracy conditions at ``x``.

    Coverage: one-step images ``f(x) + t`` are binned on a ``grid x grid``
    square of half-width ``epsilon`` around ``f(x)``; ``xi`` is the distance
    to the nearest empty cell (less half a cell diagonal). Density: the same
    images on a coarser ``density_grid`` square must stay below
    ``(1 + density_slack) / (pi epsilon^2)``.
    """

    eps = model.epsilon
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    fx = map_.apply(as_points(x).reshape(2))
    images = wrap(fx + sample_noise(model, rng, size=samples))
    if eps == 0.0:
        _LOGGER.info("nondegeneracy_degenerate epsilon=0")
        return NondegeneracyReport(0.0, samples, 0.0, 0.0, float("inf"), float("inf"), False, False)

    offsets = torus_delta(fx, images)

    counts, edges = _square_counts(offsets, eps, grid)
    centres = 0.5 * (edges[:-1] + edges[1:])
    cx, cy = np.meshgrid(centres, centres, indexing="ij")
    half_diag = (edges[1] - edges[0]) * np.sqrt(2.0) / 2.0
    empty = counts == 0
    if np.any(empty):
        xi = float(np.clip(np.hypot(cx[empty], cy[empty]) - half_diag, 0.0, None).min())
    else:
        xi = eps

    coarse, coarse_edges = _square_counts(offsets, eps, density_grid)
    cell_area = (coarse_edges[1] - coarse_edges[0]) ** 2
    max_density = float(coarse.max() / (samples * cell_area))
    bound = 1.0 / (np.pi * eps**2)

    report = NondegeneracyReport(
        epsilon=eps,
        samples=samples,
        xi=xi,
        xi_ratio=xi / eps,
        max_density=max_density,
        density_bound=bound,
        covers_ball=xi / eps >= coverage_ratio,
        bounded_density=max_density <= bound * (1.0 + density_slack),
    )
    _LOGGER.info(
        "nondegeneracy epsilon=%s xi_ratio=%.4f density_ratio=%.4f",
        eps,
        report.xi_ratio,
        max_density / bound,
    )
    return report


def _square_counts(
    offsets: FloatArray, half_width: float, bins: int
) -> Tuple[np.ndarray, FloatArray]:
    edges = np.linspace(-half_width, half_width, bins + 1)
    counts, _, _ = np.histogram2d(offsets[:, 0], offsets[:, 1], bins=[edges, edges])
    return counts, edges


__all__ = [
    "NondegeneracyReport",
    "RandomOrbit",
    "check_nondegeneracy",
    "ensemble_starts",
    "ensemble_steps",
    "orbit_frame",
    "random_orbit",
]
