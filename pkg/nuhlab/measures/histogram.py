"""Grid histograms on the torus and the distances used to compare them."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from scipy.stats import wasserstein_distance

from ..dynamics.maps import SelfMap
from ..dynamics.torus import FloatArray, wrap
from ..ensemble import StreamJob, plan_jobs, run_streams
from ..errors import DomainError
from ..noise.model import NoiseModel, SeedPlan
from ..noise.orbits import RandomOrbit, ensemble_starts, ensemble_steps

_LOGGER = logging.getLogger(__name__)

MASS_TOL = 1e-9
_BINARY_DTYPE = np.dtype("<f8")
_HEADER_DTYPE = np.dtype("<i8")

Observable = Callable[[FloatArray], FloatArray]


@dataclass(frozen=True, eq=False)
class GridHistogram:
    """Cell masses on an ``n x n`` grid; ``mass[row, col]`` covers
    ``y in [row/n, (row+1)/n)`` and ``x in [col/n, (col+1)/n)``."""

    n: int
    mass: FloatArray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "mass", mass)
        if mass.shape != (self.n, self.n):
            raise DomainError(f"mass has shape {mass.shape}, expected ({self.n}, {self.n})")
        if np.any(mass < 0.0):
            raise DomainError("histogram has negative cells")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"histogram mass sums to {total!r}")

    @classmethod
    def uniform(cls, n: int) -> "GridHistogram":
        return cls(n, np.full((n, n), 1.0 / (n * n)))

    @classmethod
    def from_counts(cls, counts: ArrayLike) -> "GridHistogram":
        arr = np.asarray(counts, dtype=float)
        total = arr.sum()
        if total <= 0.0:
            raise DomainError("cannot normalise an empty histogram")
        return cls(arr.shape[0], arr / total)

    @classmethod
    def from_points(cls, points: ArrayLike, n: int) -> "GridHistogram":
        return cls.from_counts(cell_counts(points, n))

    def marginals(self) -> Tuple[FloatArray, FloatArray]:
        """``(x-marginal, y-marginal)``."""
        return self.mass.sum(axis=0), self.mass.sum(axis=1)

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.indices((self.n, self.n))
        return pd.DataFrame(
            {"row": rows.ravel(), "col": cols.ravel(), "mass": self.mass.ravel()}
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "GridHistogram":
        n = int(max(frame["row"].max(), frame["col"].max())) + 1
        mass = np.zeros((n, n))
        mass[frame["row"].to_numpy(), frame["col"].to_numpy()] = frame["mass"].to_numpy()
        return cls(n, mass)

    def to_bytes(self) -> bytes:
        """``n`` as little-endian int64, then ``n*n`` little-endian float64 row-major."""
        return (
            np.array([self.n], dtype=_HEADER_DTYPE).tobytes()
            + self.mass.astype(_BINARY_DTYPE).tobytes()
        )

    @classmethod
    def from_bytes(cls, payload: bytes) -> "GridHistogram":
        n = int(np.frombuffer(payload[:8], dtype=_HEADER_DTYPE)[0])
        mass = np.frombuffer(payload[8:], dtype=_BINARY_DTYPE)
        if mass.size != n * n:
            raise DomainError(f"binary grid holds {mass.size} cells, expected {n * n}")
        return cls(n, mass.reshape(n, n).astype(float))


def cell_index(points: ArrayLike, n: int) -> np.ndarray:
    """Flat cell index ``row * n + col`` of each point."""
    pts = wrap(points)
    cols = np.minimum((pts[..., 0] * n).astype(np.int64), n - 1)
    rows = np.minimum((pts[..., 1] * n).astype(np.int64), n - 1)
    return rows * n + cols


def cell_counts(points: ArrayLike, n: int) -> FloatArray:
    idx = cell_index(np.asarray(points, dtype=float).reshape(-1, 2), n)
    return np.bincount(idx, minlength=n * n).reshape(n, n).astype(float)


def birkhoff_average(orbit: RandomOrbit, observable: Observable) -> float:
    """Mean of ``observable`` over ``points[0 .. steps - 1]``."""
    pts = orbit.points[: max(orbit.steps, 1)]
    return float(np.mean(observable(pts)))


def empirical_histogram(
    orbits: Sequence[RandomOrbit], n: int, burn_in: int
) -> GridHistogram:
    counts = np.zeros((n, n))
    for orbit in orbits:
        if len(orbit) <= burn_in:
            raise DomainError(f"orbit of length {len(orbit)} is not longer than burn_in={burn_in}")
        counts += cell_counts(orbit.points[burn_in:], n)
    return GridHistogram.from_counts(counts)


def _histogram_chunk(job: StreamJob) -> Dict[int, FloatArray]:
    p = job.params
    rng = job.rng()
    grids: List[int] = p["grids"]
    counts = {g: np.zeros(g * g) for g in grids}
    starts = ensemble_starts(rng, job.size)
    for j, x in ensemble_steps(p["map"], p["model"], starts, p["n_steps"], rng):
        if j < p["burn_in"]:
            continue
        for g in grids:
            counts[g] += np.bincount(cell_index(x, g), minlength=g * g)
    return counts


def ensemble_histogram(
    map_: SelfMap,
    model: NoiseModel,
    ensemble: int,
    n_steps: int,
    burn_in: int,
    grids: Sequence[int],
    plan: SeedPlan,
    *,
    workers: int = 1,
) -> Dict[int, GridHistogram]:
    """Histograms of all post-burn-in points of an ensemble, on several grids at once."""

    if n_steps <= burn_in:
        raise DomainError(f"n_steps={n_steps} must exceed burn_in={burn_in}")
    grid_list = sorted(set(int(g) for g in grids))
    jobs = plan_jobs(
        plan, ensemble, map=map_, model=model, n_steps=n_steps, burn_in=burn_in, grids=grid_list
    )
    parts = run_streams(_histogram_chunk, jobs, workers)
    out: Dict[int, GridHistogram] = {}
    for g in grid_list:
        total = np.sum([part[g] for part in parts], axis=0)
        out[g] = GridHistogram.from_counts(total.reshape(g, g))
    _LOGGER.info(
        "ensemble_histogram epsilon=%s orbits=%d steps=%d grids=%s",
        model.epsilon,
        ensemble,
        n_steps,
        grid_list,
    )
    return out


def l1_distance(h1: GridHistogram, h2: GridHistogram) -> float:
    if h1.n != h2.n:
        raise DomainError(f"grid sizes differ: {h1.n} vs {h2.n}")
    return float(np.abs(h1.mass - h2.mass).sum())


def marginal_wasserstein(h1: GridHistogram, h2: GridHistogram) -> Tuple[float, float]:
    """1-Wasserstein distances between the x- and y-marginals (cell-centre supports)."""
    if h1.n != h2.n:
        raise DomainError(f"grid sizes differ: {h1.n} vs {h2.n}")
    centres = (np.arange(h1.n) + 0.5) / h1.n
    (x1, y1), (x2, y2) = h1.marginals(), h2.marginals()
    return (
        float(wasserstein_distance(centres, centres, x1, x2)),
        float(wasserstein_distance(centres, centres, y1, y2)),
    )


__all__ = [
    "GridHistogram",
    "Observable",
    "birkhoff_average",
    "cell_counts",
    "cell_index",
    "empirical_histogram",
    "ensemble_histogram",
    "l1_distance",
    "marginal_wasserstein",
]
