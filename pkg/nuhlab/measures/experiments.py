"""Ensemble experiments: zero-noise stability, random expansion and occupancy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from scipy.stats import linregress

from ..cones.directions import DEFAULT_SETTLE, cs_log_norms, ensemble_cocycle_steps
from ..dynamics.maps import SelfMap, TorusMap
from ..dynamics.torus import FloatArray, torus_distance, wrap
from ..ensemble import StreamJob, plan_jobs, run_streams
from ..errors import DomainError
from ..noise.model import NoiseModel, SeedPlan
from ..noise.orbits import ensemble_starts, ensemble_steps, random_orbit
from .histogram import GridHistogram, ensemble_histogram, l1_distance, marginal_wasserstein
from .ulam import stationary_density, ulam_operator

_LOGGER = logging.getLogger(__name__)

REFINEMENT_GRIDS = (16, 32, 64)
DEFAULT_CHECKPOINTS = (100, 300, 1_000, 3_000, 10_000)
DEFAULT_C_LADDER = (0.0, 0.01, 0.02, 0.05, 0.1)
STABILITY_BAND = 0.02


def _log_fraction_slope(ns: Sequence[int], fractions: Sequence[float], ensemble: int) -> float:
    """Slope of ``log(max(fraction, 0.5/ensemble))`` against ``n``; 0 with fewer than two points."""
    if len(ns) < 2:
        return 0.0
    floor = 0.5 / ensemble
    logs = np.log(np.maximum(np.asarray(fractions, dtype=float), floor))
    if np.allclose(logs, logs[0]):
        return 0.0
    return float(linregress(np.asarray(ns, dtype=float), logs).slope)


# --------------------------------------------------------------------------
# stochastic stability
# --------------------------------------------------------------------------


def srb_reference(
    map_: SelfMap,
    ensemble: int,
    n_steps: int,
    burn_in: int,
    grids: Sequence[int],
    plan: SeedPlan,
    *,
    workers: int = 1,
) -> Dict[int, GridHistogram]:
    """Long-orbit histograms of the deterministic map from Lebesgue-random starts."""
    return ensemble_histogram(
        map_, NoiseModel(0.0), ensemble, n_steps, burn_in, grids, plan, workers=workers
    )


@dataclass(frozen=True)
class StabilityPoint:
    epsilon: float
    l1_distance: float
    orbit_count: int
    steps: int
    w1_x: float
    w1_y: float
    ulam_l1: Optional[float] = None
    estimator_gap: Optional[float] = None


@dataclass
class StabilityCurve:
    points: List[StabilityPoint]
    grid_n: int
    refinement: Dict[int, float] = field(default_factory=dict)

    @property
    def max_l1(self) -> float:
        return max(p.l1_distance for p in self.points)

    def nonincreasing(self, band: float = STABILITY_BAND) -> bool:
        """Distances along the descending ladder never rise by more than ``band``."""
        values = [p.l1_distance for p in self.points]
        return all(b <= a + band for a, b in zip(values, values[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epsilon": [p.epsilon for p in self.points],
                "l1_distance": [p.l1_distance for p in self.points],
                "orbit_count": [p.orbit_count for p in self.points],
                "steps": [p.steps for p in self.points],
            }
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid_n": self.grid_n,
            "max_l1": self.max_l1,
            "nonincreasing": self.nonincreasing(),
            "w1": [{"epsilon": p.epsilon, "x": p.w1_x, "y": p.w1_y} for p in self.points],
            "ulam_l1": [p.ulam_l1 for p in self.points],
            "estimator_gap": [p.estimator_gap for p in self.points],
            "refinement": {str(k): v for k, v in sorted(self.refinement.items())},
        }


def stability_curve(
    map_: SelfMap,
    epsilons: Sequence[float],
    reference: GridHistogram,
    *,
    ensemble: int,
    n_steps: int,
    burn_in: int,
    plan: SeedPlan,
    refinement_references: Optional[Mapping[int, GridHistogram]] = None,
    ulam_samples: Optional[int] = None,
    workers: int = 1,
) -> StabilityCurve:
    """L1 distance of the noisy stationary estimate to ``reference`` along a descending ladder.

    With ``refinement_references`` the smallest noise level is re-measured on
    each of those grids. With ``ulam_samples`` every level also gets the Ulam
    fixed point and its L1 gap to the orbit histogram.
    """

    eps = [float(e) for e in epsilons]
    if not eps:
        raise DomainError("epsilon ladder is empty")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError(f"epsilon ladder must be strictly descending, got {eps}")
    refs = dict(refinement_references or {})
    points: List[StabilityPoint] = []
    refinement: Dict[int, float] = {}
    for i, epsilon in enumerate(eps):
        model = NoiseModel(epsilon)
        last = i == len(eps) - 1
        grids = [reference.n] + (list(refs) if last else [])
        hists = ensemble_histogram(
            map_, model, ensemble, n_steps, burn_in, grids, plan, workers=workers
        )
        hist = hists[reference.n]
        w1_x, w1_y = marginal_wasserstein(hist, reference)
        ulam_l1 = gap = None
        if ulam_samples is not None:
            op = ulam_operator(map_, model, reference.n, ulam_samples, plan.stream(plan.streams))
            density = stationary_density(op)
            ulam_l1 = l1_distance(density, reference)
            gap = l1_distance(density, hist)
        if last:
            refinement = {g: l1_distance(hists[g], refs[g]) for g in refs}
        point = StabilityPoint(
            epsilon=epsilon,
            l1_distance=l1_distance(hist, reference),
            orbit_count=ensemble,
            steps=n_steps,
            w1_x=w1_x,
            w1_y=w1_y,
            ulam_l1=ulam_l1,
            estimator_gap=gap,
        )
        _LOGGER.info("stability_point epsilon=%s l1=%.6f", epsilon, point.l1_distance)
        points.append(point)
    return StabilityCurve(points, reference.n, refinement)


# --------------------------------------------------------------------------
# random non-uniform expansion
# --------------------------------------------------------------------------


@dataclass
class RnueResult:
    values: FloatArray
    checkpoints: List[int]
    checkpoint_values: FloatArray
    c_ladder: List[float]
    fail_c: float
    cs_means: FloatArray = field(default_factory=lambda: np.empty(0))

    @property
    def ensemble(self) -> int:
        return int(self.values.shape[0])

    def fraction_above(self, c: float) -> float:
        return float(np.mean(self.values > -c))

    def failing_fractions(self) -> List[float]:
        return [float(np.mean(col > -self.fail_c)) for col in self.checkpoint_values.T]

    @property
    def fail_slope(self) -> float:
        return _log_fraction_slope(self.checkpoints, self.failing_fractions(), self.ensemble)

    @property
    def all_negative(self) -> bool:
        return bool(np.all(self.values < 0.0))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": self.checkpoints, "failing_fraction": self.failing_fractions()})

    def to_dict(self) -> Dict[str, Any]:
        cs = self.cs_means
        return {
            "ensemble": self.ensemble,
            "mean": float(np.mean(self.values)),
            "max": float(np.max(self.values)),
            "min": float(np.min(self.values)),
            "q05": float(np.quantile(self.values, 0.05)),
            "fraction_above": {repr(c): self.fraction_above(c) for c in self.c_ladder},
            "fail_c": self.fail_c,
            "checkpoints": list(self.checkpoints),
            "failing_fractions": self.failing_fractions(),
            "fail_slope": self.fail_slope,
            "cs_mean": float(np.mean(cs)) if cs.size else None,
            "cs_max": float(np.max(cs)) if cs.size else None,
        }


def _rnue_chunk(job: StreamJob) -> FloatArray:
    p = job.params
    rng = job.rng()
    starts = ensemble_starts(rng, job.size)
    checkpoints: List[int] = p["checkpoints"]
    settle: int = p["settle"]
    sums = np.zeros(job.size)
    out = np.empty((job.size, len(checkpoints)))
    k = 0
    for j, _, a in ensemble_cocycle_steps(p["map"], p["model"], starts, p["n_steps"], settle, rng):
        sums += a
        while k < len(checkpoints) and checkpoints[k] == j + 1:
            out[:, k] = sums / (j + 1 - settle)
            k += 1
    return out


def rnue_experiment(
    map_: TorusMap,
    model: NoiseModel,
    ensemble: int,
    n_steps: int,
    plan: SeedPlan,
    *,
    settle: int = DEFAULT_SETTLE,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    c_ladder: Sequence[float] = DEFAULT_C_LADDER,
    fail_c: Optional[float] = None,
    cs_orbits: int = 0,
    workers: int = 1,
) -> RnueResult:
    """Per-orbit averages ``(1/n) sum a_j`` over Lebesgue-random starts.

    ``checkpoints`` beyond ``n_steps`` are dropped and ``n_steps`` is always a
    checkpoint. ``fail_c`` defaults to 95% of the magnitude of the ensemble
    mean, so an orbit "fails" when its average is noticeably weaker than typical.
    """

    if ensemble < 1 or n_steps <= settle:
        raise DomainError(f"need ensemble >= 1 and n_steps > settle, got {ensemble}, {n_steps}")
    marks = sorted({int(c) for c in checkpoints if settle < c <= n_steps} | {n_steps})
    jobs = plan_jobs(
        plan, ensemble, map=map_, model=model, n_steps=n_steps, settle=settle, checkpoints=marks
    )
    table = np.vstack(run_streams(_rnue_chunk, jobs, workers))
    values = table[:, -1]
    if fail_c is None:
        fail_c = max(0.0, -0.95 * float(np.mean(values)))

    cs_means = np.empty(0)
    if cs_orbits > 0:
        rng = plan.stream(plan.streams)
        starts = ensemble_starts(rng, cs_orbits)
        cs_means = np.array(
            [
                cs_log_norms(map_, random_orbit(map_, model, x0, n_steps, rng), settle).mean
                for x0 in starts
            ]
        )

    result = RnueResult(
        values=values,
        checkpoints=marks,
        checkpoint_values=table,
        c_ladder=[float(c) for c in c_ladder],
        fail_c=float(fail_c),
        cs_means=cs_means,
    )
    _LOGGER.info(
        "rnue epsilon=%s orbits=%d n=%d mean=%.6f max=%.6f",
        model.epsilon,
        ensemble,
        n_steps,
        float(np.mean(values)),
        float(np.max(values)),
    )
    return result


# --------------------------------------------------------------------------
# occupancy of the complement of the deformation region
# --------------------------------------------------------------------------


@dataclass
class FrequencyResult:
    n_ladder: List[int]
    fractions: FloatArray
    zeta: float
    zeta_bad: float

    @property
    def ensemble(self) -> int:
        return int(self.fractions.shape[0])

    def mean_fractions(self) -> List[float]:
        return [float(v) for v in self.fractions.mean(axis=0)]

    def bad_fractions(self) -> List[float]:
        return [float(np.mean(col < self.zeta_bad)) for col in self.fractions.T]

    @property
    def bad_slope(self) -> float:
        return _log_fraction_slope(self.n_ladder, self.bad_fractions(), self.ensemble)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "n": self.n_ladder,
                "mean_fraction": self.mean_fractions(),
                "q05_fraction": [float(np.quantile(c, 0.05)) for c in self.fractions.T],
                "bad_fraction": self.bad_fractions(),
            }
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ensemble": self.ensemble,
            "n_ladder": list(self.n_ladder),
            "zeta": self.zeta,
            "zeta_bad": self.zeta_bad,
            "mean_fractions": self.mean_fractions(),
            "bad_fractions": self.bad_fractions(),
            "bad_slope": self.bad_slope,
        }


def _frequency_chunk(job: StreamJob) -> FloatArray:
    p = job.params
    rng = job.rng()
    ladder: List[int] = p["n_ladder"]
    outside = np.zeros(job.size)
    out = np.empty((job.size, len(ladder)))
    k = 0
    for j, x in ensemble_steps(p["map"], p["model"], ensemble_starts(rng, job.size), ladder[-1] - 1, rng):
        outside += torus_distance(x, p["center"]) >= p["radius"]
        while k < len(ladder) and ladder[k] == j + 1:
            out[:, k] = outside / (j + 1)
            k += 1
    return out


def frequency_experiment(
    map_: SelfMap,
    model: NoiseModel,
    center: ArrayLike,
    radius: float,
    ensemble: int,
    n_ladder: Sequence[int],
    plan: SeedPlan,
    *,
    zeta_bad: Optional[float] = None,
    workers: int = 1,
) -> FrequencyResult:
    """Fraction of ``points[0 .. n-1]`` outside ``ball(center, radius)`` per orbit and ``n``.

    The empirical ``zeta`` is the 5th percentile at the largest ``n``; an orbit
    is bad at ``n`` when its fraction is below ``zeta_bad`` (default ``0.9 * zeta``).
    """

    ladder = sorted({int(n) for n in n_ladder})
    if not ladder or ladder[0] < 1:
        raise DomainError(f"n_ladder must hold positive integers, got {list(n_ladder)}")
    if radius < 0.0:
        raise DomainError(f"radius must be >= 0, got {radius}")
    if ensemble < 1:
        raise DomainError(f"ensemble must be >= 1, got {ensemble}")
    c = wrap(center).reshape(2)
    jobs = plan_jobs(plan, ensemble, map=map_, model=model, center=c, radius=float(radius), n_ladder=ladder)
    fractions = np.vstack(run_streams(_frequency_chunk, jobs, workers))
    zeta = float(np.quantile(fractions[:, -1], 0.05))
    result = FrequencyResult(
        n_ladder=ladder,
        fractions=fractions,
        zeta=zeta,
        zeta_bad=0.9 * zeta if zeta_bad is None else float(zeta_bad),
    )
    _LOGGER.info(
        "frequency epsilon=%s orbits=%d radius=%s zeta=%.4f", model.epsilon, ensemble, radius, zeta
    )
    return result


__all__ = [
    "DEFAULT_CHECKPOINTS",
    "DEFAULT_C_LADDER",
    "FrequencyResult",
    "REFINEMENT_GRIDS",
    "RnueResult",
    "StabilityCurve",
    "StabilityPoint",
    "frequency_experiment",
    "rnue_experiment",
    "srb_reference",
    "stability_curve",
]
