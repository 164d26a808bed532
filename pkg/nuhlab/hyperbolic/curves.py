"""cu-curves at hyperbolic times: backward contraction and bounded distortion.

A curve for hyperbolic time ``n`` starts at orbit step 0 tangent to ``e_u``
and is sized so that its image at step ``n`` has arclength ``0.9 * delta1``.
Such curves are far too short to represent in floating point for most of
their life, so they evolve in two phases:

* while shorter than ``MIN_LENGTH`` the curve is a segment along the tangent
  cocycle direction and its length follows the trace exactly;
* afterwards it is materialised as a polyline of displacements from the
  orbit point and mapped with ``TorusMap.displace``, which keeps relative
  precision and is unaffected by the (shared) noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from ..cones.cones import ConeParams, cone_mask, cu_min_stretch
from ..cones.curvature import arclength, vertex_tangents
from ..cones.directions import CocycleTrace
from ..dynamics.conditions import grid_points
from ..dynamics.maps import TorusMap
from ..dynamics.torus import FloatArray, wrap
from ..errors import ConeExitError, DomainError
from ..noise.model import RngStream
from ..noise.orbits import RandomOrbit

_LOGGER = logging.getLogger(__name__)

MIN_LENGTH = 1e-10
DEFAULT_VERTICES = 81
IMAGE_FRACTION = 0.9


@dataclass(frozen=True, eq=False)
class CuCurve:
    """Polyline ``anchor + offsets`` materialised at orbit step ``step``.

    The middle vertex is the orbit point; ``log_length`` is the log arclength
    at ``step``.
    """

    step: int
    anchor: FloatArray
    offsets: FloatArray
    log_length: float

    @property
    def points(self) -> FloatArray:
        return self.anchor + self.offsets

    @property
    def vertices(self) -> int:
        return int(self.offsets.shape[0])


def _require_unsettled(trace: CocycleTrace) -> None:
    if trace.start != 0:
        raise DomainError(
            "curve analysis needs a trace seeded at orbit step 0 (settle=0)"
        )


def cu_curve_for(
    orbit: RandomOrbit,
    trace: CocycleTrace,
    hyp_time: int,
    delta1: float,
    *,
    vertices: int = DEFAULT_VERTICES,
) -> CuCurve:
    """Materialise the curve for ``hyp_time`` at the first step it is resolvable."""

    _require_unsettled(trace)
    if vertices < 3:
        raise DomainError(f"a cu-curve needs at least 3 vertices, got {vertices}")
    if vertices % 2 == 0:
        vertices += 1
    if not (1 <= hyp_time <= min(len(trace), orbit.steps)):
        raise DomainError(f"hyperbolic time {hyp_time} outside trace of length {len(trace)}")
    if delta1 <= 0.0:
        raise DomainError(f"delta1 must be positive, got {delta1}")

    # log length at step j is log(0.9 delta1) + sum_{i=j}^{n-1} a_i
    tail = np.concatenate([np.cumsum(trace.log_norms[:hyp_time][::-1])[::-1], [0.0]])
    log_lengths = math.log(IMAGE_FRACTION * delta1) + tail
    resolvable = np.flatnonzero(log_lengths >= math.log(MIN_LENGTH))
    step = min(int(resolvable[0]), hyp_time - 1)
    length = math.exp(log_lengths[step])
    direction = trace.directions[step]
    ts = np.linspace(-0.5, 0.5, vertices)
    ts[vertices // 2] = 0.0
    offsets = (ts * length)[:, None] * direction
    return CuCurve(step, orbit.points[step].copy(), offsets, float(log_lengths[step]))


@dataclass(frozen=True, eq=False)
class CurveEvolution:
    hyp_time: int
    log_lengths: FloatArray
    log_stretch: FloatArray
    image_offsets: FloatArray
    materialised_at: int


def evolve_curve(
    map_: TorusMap,
    orbit: RandomOrbit,
    trace: CocycleTrace,
    hyp_time: int,
    delta1: float,
    *,
    vertices: int = DEFAULT_VERTICES,
    cone: Optional[ConeParams] = None,
) -> CurveEvolution:
    """Push the curve for ``hyp_time`` to its image, tracking per-vertex stretch."""

    curve = cu_curve_for(orbit, trace, hyp_time, delta1, vertices=vertices)
    m = curve.step
    a = trace.log_norms
    log_lengths = np.empty(hyp_time + 1)
    # linear phase: lengths follow the cocycle backward from the materialised step
    back = np.concatenate([np.cumsum(a[:m][::-1])[::-1], [0.0]])
    log_lengths[: m + 1] = curve.log_length + back

    offsets = curve.offsets
    tangents = np.broadcast_to(trace.directions[m], offsets.shape).copy()
    log_stretch = np.full(offsets.shape[0], -float(np.sum(a[:m])))
    for j in range(m, hyp_time):
        anchor = orbit.points[j]
        jac = map_.jacobian(anchor + offsets)
        pushed = np.einsum("nij,nj->ni", jac, tangents)
        norms = np.linalg.norm(pushed, axis=1)
        log_stretch += np.log(norms)
        tangents = pushed / norms[:, None]
        offsets = map_.displace(anchor, offsets)
        log_lengths[j + 1] = math.log(arclength(offsets)[-1])
        if cone is not None:
            ok = cone_mask(cone.coordinates(vertex_tangents(offsets)), cone.width, "cu")
            if not np.all(ok):
                raise ConeExitError(
                    f"curve for hyperbolic time {hyp_time} left the cu cone at step {j + 1}"
                )
    return CurveEvolution(hyp_time, log_lengths, log_stretch, offsets, m)


@dataclass(frozen=True, eq=False)
class ContractionReport:
    hyp_time: int
    alpha: float
    ratios: FloatArray
    log_excess: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.log_excess <= 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hyp_time": self.hyp_time,
            "alpha": self.alpha,
            "worst_ratio_over_bound": math.exp(self.log_excess + math.log1p(self.tol)),
            "passed": self.passed,
        }


def check_backward_contraction(
    map_: TorusMap,
    orbit: RandomOrbit,
    trace: CocycleTrace,
    hyp_time: int,
    delta1: float,
    alpha: float,
    *,
    tol: float = 0.05,
    vertices: int = DEFAULT_VERTICES,
    cone: Optional[ConeParams] = None,
) -> ContractionReport:
    """Ratios ``L_{n-k} / L_n`` of curve lengths against ``alpha^{k/2} (1 + tol)``.

    ``ratios[k]`` is the ratio for ``k = 0 .. n``; ``ratios[0] == 1``.
    """

    evo = evolve_curve(
        map_, orbit, trace, hyp_time, delta1, vertices=vertices, cone=cone
    )
    n = hyp_time
    log_ratio = evo.log_lengths[n::-1] - evo.log_lengths[n]
    k = np.arange(n + 1)
    log_bound = 0.5 * k * math.log(alpha) + math.log1p(tol)
    excess = float(np.max((log_ratio - log_bound)[1:])) if n >= 1 else -math.inf
    return ContractionReport(n, alpha, np.exp(log_ratio), excess, tol)


@dataclass(frozen=True)
class DistortionReport:
    c2_constant: float
    max_ratio: float
    pairs_checked: int
    delta1: float
    hyp_time: int = 0

    @property
    def passed(self) -> bool:
        return 1.0 <= self.max_ratio <= self.c2_constant

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hyp_time": self.hyp_time,
            "c2_constant": self.c2_constant,
            "max_ratio": self.max_ratio,
            "pairs_checked": self.pairs_checked,
            "delta1": self.delta1,
            "passed": self.passed,
        }


def check_distortion(
    map_: TorusMap,
    orbit: RandomOrbit,
    trace: CocycleTrace,
    hyp_time: int,
    delta1: float,
    c2_constant: float,
    *,
    vertices: int = DEFAULT_VERTICES,
    cone: Optional[ConeParams] = None,
) -> DistortionReport:
    """Largest ratio of tangential stretches of ``f^n`` between nearby vertices."""

    evo = evolve_curve(
        map_, orbit, trace, hyp_time, delta1, vertices=vertices, cone=cone
    )
    s = arclength(evo.image_offsets)
    near = np.abs(s[:, None] - s[None, :]) <= delta1
    gaps = evo.log_stretch[:, None] - evo.log_stretch[None, :]
    max_log = float(np.max(np.where(near, gaps, -np.inf)))
    return DistortionReport(
        c2_constant=c2_constant,
        max_ratio=math.exp(max_log),
        pairs_checked=int(near.sum() - near.shape[0]) // 2,
        delta1=delta1,
        hyp_time=hyp_time,
    )


def distortion_trend(reports: List[DistortionReport]) -> Dict[str, float]:
    """Least-squares slope of ``max_ratio`` against ``n`` with a 95% interval."""

    if len(reports) < 3:
        return {"slope": 0.0, "ci_low": -math.inf, "ci_high": math.inf, "points": len(reports)}
    n = np.array([r.hyp_time for r in reports], dtype=float)
    y = np.array([r.max_ratio for r in reports])
    if np.ptp(n) == 0.0:
        return {"slope": 0.0, "ci_low": -math.inf, "ci_high": math.inf, "points": len(reports)}
    fit = stats.linregress(n, y)
    half = float(stats.t.ppf(0.975, len(reports) - 2) * fit.stderr)
    return {
        "slope": float(fit.slope),
        "ci_low": float(fit.slope) - half,
        "ci_high": float(fit.slope) + half,
        "points": len(reports),
    }


def _log_cu_stretch(map_: TorusMap, points: FloatArray, cone: ConeParams) -> FloatArray:
    eig = map_.splitting.to_eigen(map_.jacobian(points))
    return np.log(cu_min_stretch(eig, cone.width))


def distortion_bound(
    map_: TorusMap,
    cone: ConeParams,
    delta1: float,
    alpha: float,
    *,
    grid_n: int = 256,
) -> float:
    """A-priori ``C2 = exp(L delta1 / (1 - sqrt(alpha)))``.

    ``L`` is the largest finite-difference gradient of the log cu stretch on a
    ``grid_n`` grid.
    """

    h = 1.0 / grid_n
    pts = grid_points(grid_n)
    grads = []
    for step in (np.array([h, 0.0]), np.array([0.0, h])):
        hi = _log_cu_stretch(map_, wrap(pts + step), cone)
        lo = _log_cu_stretch(map_, wrap(pts - step), cone)
        grads.append((hi - lo) / (2.0 * h))
    lip = float(np.max(np.hypot(grads[0], grads[1])))
    return math.exp(lip * delta1 / (1.0 - math.sqrt(alpha)))


@dataclass(frozen=True)
class Delta1Report:
    delta1: float
    alpha: float
    max_ratio: float
    bound: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta1": self.delta1,
            "alpha": self.alpha,
            "max_ratio": self.max_ratio,
            "bound": self.bound,
            "samples": self.samples,
            "passed": self.passed,
        }


def check_delta1(
    map_: TorusMap,
    cone: ConeParams,
    alpha: float,
    delta1: float,
    samples: int,
    rng: RngStream,
) -> Delta1Report:
    """Worst ratio of inverse cu stretches at pairs no farther apart than ``delta1``.

    Compares the weakest cu stretch at ``y`` with the strongest at ``x`` over
    the whole cone, against ``alpha^{-1/2}``.
    """

    x = wrap(rng.random((samples, 2)))
    radius = delta1 * np.sqrt(rng.random(samples))
    theta = 2.0 * np.pi * rng.random(samples)
    y = wrap(x + np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
    weak = _log_cu_stretch(map_, y, cone)
    eig = map_.splitting.to_eigen(map_.jacobian(x))
    m_us, m_uu = eig[:, 1, 0], eig[:, 1, 1]
    strong = np.log(np.maximum(np.abs(m_uu + cone.width * m_us), np.abs(m_uu - cone.width * m_us)))
    ratio = float(np.exp(np.max(strong - weak)))
    return Delta1Report(delta1, alpha, ratio, alpha**-0.5, samples)


@dataclass(frozen=True)
class PushforwardDensity:
    hyp_time: int
    density_ratio: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.density_ratio <= self.bound


def pushforward_density_ratio(evo: CurveEvolution, grid_1d: int) -> float:
    """max/min of the binned density of the pushed arclength measure."""
    s = arclength(evo.image_offsets)
    total = s[-1]
    mass = np.linspace(0.0, 1.0, s.size)
    edges = np.linspace(0.0, total, grid_1d + 1)
    cumulative = np.interp(edges, s, mass)
    density = np.diff(cumulative) / np.diff(edges) * total
    return float(density.max() / density.min())


def curve_pushforward_density(
    map_: TorusMap,
    orbit: RandomOrbit,
    trace: CocycleTrace,
    hyp_times: NDArray[np.int64],
    delta1: float,
    *,
    grid_1d: int = 16,
    c2_constant: float,
    vertices: int = DEFAULT_VERTICES,
    cone: Optional[ConeParams] = None,
) -> List[PushforwardDensity]:
    """Density of the pushed normalised arclength measure at each hyperbolic time."""

    if vertices < 3:
        raise DomainError(f"a cu-curve needs at least 3 vertices, got {vertices}")
    out: List[PushforwardDensity] = []
    for n in hyp_times:
        evo = evolve_curve(
            map_, orbit, trace, int(n), delta1, vertices=vertices, cone=cone
        )
        out.append(
            PushforwardDensity(int(n), pushforward_density_ratio(evo, grid_1d), c2_constant**2)
        )
    return out


__all__ = [
    "ContractionReport",
    "CuCurve",
    "CurveEvolution",
    "Delta1Report",
    "DistortionReport",
    "IMAGE_FRACTION",
    "MIN_LENGTH",
    "PushforwardDensity",
    "check_backward_contraction",
    "check_delta1",
    "check_distortion",
    "cu_curve_for",
    "curve_pushforward_density",
    "distortion_bound",
    "distortion_trend",
    "evolve_curve",
    "pushforward_density_ratio",
]
