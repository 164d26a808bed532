"""Hölder curvature of discretised cu-curves and its evolution under iteration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import ArrayLike

from ..dynamics.maps import TorusMap
from ..dynamics.torus import FloatArray
from ..errors import ConeExitError, DomainError
from ..noise.model import NoiseModel, RngStream, sample_noise
from .cones import ConeParams, cone_mask

_LOGGER = logging.getLogger(__name__)

DEFAULT_ZETA = 0.5
CHART_RADIUS = 0.1


@dataclass(frozen=True)
class CurvatureReport:
    holder_exponent: float
    kappa: float
    c1_bound: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holder_exponent": self.holder_exponent,
            "kappa": self.kappa,
            "c1_bound": self.c1_bound,
        }


def vertex_tangents(curve: FloatArray) -> FloatArray:
    """Unit tangents: central differences inside, one-sided at the ends."""
    diffs = np.empty_like(curve)
    diffs[1:-1] = curve[2:] - curve[:-2]
    diffs[0] = curve[1] - curve[0]
    diffs[-1] = curve[-1] - curve[-2]
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0.0):
        raise DomainError("curve has repeated vertices")
    return diffs / norms[:, None]


def arclength(curve: FloatArray) -> FloatArray:
    """Cumulative arclength at each vertex, starting at 0."""
    seg = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def holder_constant(
    curve: ArrayLike,
    zeta: float,
    cone: ConeParams,
    *,
    chart_radius: float = CHART_RADIUS,
    c1_bound: Optional[float] = None,
) -> CurvatureReport:
    """``max |A_x(y)| / dist_S(x, y)^zeta`` over vertex pairs within the chart.

    ``curve`` is a polyline in lift coordinates. ``A_x(y)`` is the slope of the
    tangent at ``y`` written in the basis ``(tangent at x, e_s)``.
    """

    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise DomainError(f"curve needs at least 3 planar vertices, got shape {pts.shape}")
    if not (0.0 < zeta <= 1.0):
        raise DomainError(f"Hölder exponent must lie in (0, 1], got {zeta}")
    tangents = vertex_tangents(pts)
    inside = cone_mask(cone.coordinates(tangents), cone.width, "cu")
    if not np.all(inside):
        raise DomainError(
            f"curve tangent leaves the cu cone at vertex {int(np.flatnonzero(~inside)[0])}"
        )
    s = arclength(pts)
    e_s = cone.e_s
    # cross(t_y, e_s) does not vanish inside the cu cone
    denom = tangents[:, 0] * e_s[1] - tangents[:, 1] * e_s[0]
    kappa = 0.0
    for i in range(pts.shape[0]):
        dist = np.abs(s - s[i])
        near = (dist > 0.0) & (dist <= chart_radius)
        if not np.any(near):
            continue
        tx = tangents[i]
        numer = tx[0] * tangents[near, 1] - tx[1] * tangents[near, 0]
        slope = np.abs(numer / denom[near])
        kappa = max(kappa, float(np.max(slope / dist[near] ** zeta)))
    return CurvatureReport(holder_exponent=zeta, kappa=kappa, c1_bound=c1_bound)


def _resample_half(points: FloatArray, count: int) -> FloatArray:
    s = arclength(points)
    targets = np.linspace(0.0, s[-1], count)
    return np.column_stack(
        [np.interp(targets, s, points[:, 0]), np.interp(targets, s, points[:, 1])]
    )


def trim_and_resample(
    curve: FloatArray, anchor: int, half_length: float, vertices: int
) -> FloatArray:
    """Cut the curve to arclength ``half_length`` on each side of ``anchor``.

    The result has ``vertices`` points (odd) with the anchor as the middle one.
    """

    s = arclength(curve)
    rel = s - s[anchor]
    half = vertices // 2 + 1
    sides = []
    for piece, sign in ((curve[: anchor + 1][::-1], -1.0), (curve[anchor:], 1.0)):
        r = np.abs(rel[: anchor + 1][::-1] if sign < 0 else rel[anchor:])
        keep = r <= half_length
        cut = piece[keep]
        if not keep.all():
            k = int(np.flatnonzero(~keep)[0])
            frac = (half_length - r[k - 1]) / (r[k] - r[k - 1])
            cut = np.vstack([cut, piece[k - 1] + frac * (piece[k] - piece[k - 1])])
        sides.append(_resample_half(cut, half))
    left, right = sides
    return np.vstack([left[::-1], right[1:]])


@dataclass
class CurvatureTrack:
    kappas: List[float] = field(default_factory=list)
    zeta: float = DEFAULT_ZETA
    calibration_steps: int = 10

    @property
    def c1_bound(self) -> float:
        """Twice the largest curvature seen during the calibration iterates."""
        head = self.kappas[: self.calibration_steps + 1]
        return 2.0 * max(head) if head else float("nan")

    @property
    def passed(self) -> bool:
        return bool(self.kappas) and max(self.kappas) <= self.c1_bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "zeta": self.zeta,
            "iterates": len(self.kappas) - 1,
            "kappa_max": max(self.kappas) if self.kappas else None,
            "c1_bound": self.c1_bound,
            "passed": self.passed,
        }


def iterate_cu_curve(
    map_: TorusMap,
    model: NoiseModel,
    curve: ArrayLike,
    n_iter: int,
    rng: RngStream,
    cone: ConeParams,
    *,
    zeta: float = DEFAULT_ZETA,
    chart_radius: float = CHART_RADIUS,
    calibration_steps: int = 10,
) -> CurvatureTrack:
    """Iterate a cu-polyline with noise and record its curvature after each step.

    The middle vertex follows a random orbit; after each step the image is
    trimmed to arclength ``chart_radius`` around it, resampled uniformly on
    each side and shifted back into the unit square.
    """

    pts = np.asarray(curve, dtype=float)
    if pts.shape[0] < 3 or pts.shape[0] % 2 == 0:
        raise DomainError("iterate_cu_curve needs an odd number (>= 3) of vertices")
    vertices = pts.shape[0]
    anchor = vertices // 2
    track = CurvatureTrack(zeta=zeta, calibration_steps=calibration_steps)
    track.kappas.append(holder_constant(pts, zeta, cone, chart_radius=chart_radius).kappa)
    for step in range(1, n_iter + 1):
        image = map_.apply_lift(pts) + sample_noise(model, rng)
        pts = trim_and_resample(image, anchor, chart_radius / 2.0, vertices)
        pts = pts - np.floor(pts[anchor])
        try:
            report = holder_constant(pts, zeta, cone, chart_radius=chart_radius)
        except DomainError as exc:
            raise ConeExitError(f"cu-curve left the cone at iterate {step}: {exc}") from exc
        track.kappas.append(report.kappa)
    _LOGGER.info(
        "curvature_track iterates=%d kappa_max=%.4g c1_bound=%.4g",
        n_iter,
        max(track.kappas),
        track.c1_bound,
    )
    return track


__all__ = [
    "CHART_RADIUS",
    "CurvatureReport",
    "CurvatureTrack",
    "DEFAULT_ZETA",
    "arclength",
    "holder_constant",
    "iterate_cu_curve",
    "trim_and_resample",
    "vertex_tangents",
]
