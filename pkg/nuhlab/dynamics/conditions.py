"""Grid certification of the cone, expansion and neutrality conditions.

Tags recorded in ``MapConditionsReport.violations``:

``A-cu`` / ``A-cs``
    cone invariance fails at the sample.
``B``
    off the deformation region, ``min(cu stretch, 1 / cs stretch) <= 1``.
``C``
    off the deformation region, ``max(1 / cu stretch, cs stretch) >= 1``.
``D``
    inside the region, ``max(1 / cu stretch, cs stretch) > 1 + delta0_max``.
``domination``
    ``cs stretch / cu stretch > lambda_target``.
``invertibility``
    the Jacobian changes orientation relative to the base matrix.
``cube``
    the image of the region does not fit in an open unit cube.

Stretches are measured in the adapted coordinates of the base splitting: a
cu-cone vector by its ``e_u`` component, a cs-cone vector by its ``e_s``
component.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..cones.cones import cs_max_stretch, cu_min_stretch, eigen_cone_checks
from ..errors import DomainError
from .maps import DAMap, TorusMap
from .torus import FloatArray, TorusPoint

_LOGGER = logging.getLogger(__name__)

CONDITION_TAGS = ("A-cu", "A-cs", "B", "C", "D", "domination", "invertibility", "cube")
_BOUNDARY_SAMPLES = 512


@dataclass
class MapConditionsReport:
    sigma1: float
    sigma2: float
    delta0: float
    cone_width: float
    violations: List[Tuple[TorusPoint, str]] = field(default_factory=list)
    grid_n: int = 0
    lambda_target: float = 0.5
    delta0_max: float = 0.1
    domination_max: float = 0.0
    det_min: float = 0.0
    det_max: float = 0.0
    region_image_diameter: Optional[float] = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def violation_counts(self) -> Dict[str, int]:
        counts = Counter(tag for _, tag in self.violations)
        return {tag: counts.get(tag, 0) for tag in CONDITION_TAGS}

    def to_dict(self, max_samples: int = 20) -> Dict[str, Any]:
        return {
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "delta0": self.delta0,
            "cone_width": self.cone_width,
            "grid_n": self.grid_n,
            "lambda_target": self.lambda_target,
            "delta0_max": self.delta0_max,
            "domination_max": self.domination_max,
            "det_min": self.det_min,
            "det_max": self.det_max,
            "region_image_diameter": self.region_image_diameter,
            "violation_counts": self.violation_counts(),
            "violation_samples": [
                {"x": p.x, "y": p.y, "tag": tag}
                for p, tag in self.violations[:max_samples]
            ],
        }


def grid_points(grid_n: int) -> FloatArray:
    """Cell centres ``((i + 0.5) / n, (j + 0.5) / n)``, row-major in ``y``."""
    centres = (np.arange(grid_n) + 0.5) / grid_n
    xs, ys = np.meshgrid(centres, centres, indexing="xy")
    return np.column_stack([xs.ravel(), ys.ravel()])


def _region_image_diameter(map_: TorusMap) -> Optional[float]:
    if not isinstance(map_, DAMap):
        return None
    params = map_.params
    theta = np.linspace(0.0, 2.0 * np.pi, _BOUNDARY_SAMPLES, endpoint=False)
    rim = params.center.as_array() + params.radius * np.column_stack(
        [np.cos(theta), np.sin(theta)]
    )
    image = map_.apply_lift(rim)
    gaps = image[:, None, :] - image[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", gaps, gaps))))


def verify_conditions(
    map_: TorusMap,
    cone_width: float,
    grid_n: int,
    lambda_target: float,
    *,
    delta0_max: float = 0.1,
    chunk: int = 65536,
) -> MapConditionsReport:
    if grid_n < 16:
        raise DomainError(f"grid_n must be >= 16, got {grid_n}")
    if not (0.0 < cone_width < 1.0):
        raise DomainError(f"cone width must lie in (0, 1), got {cone_width}")

    splitting = map_.splitting
    base_sign = np.sign(splitting.lambda_u * splitting.lambda_s)
    points = grid_points(grid_n)

    violations: List[Tuple[TorusPoint, str]] = []
    sigma1 = np.inf
    sigma2 = 0.0
    worst_in_region = 0.0
    domination_max = 0.0
    det_min, det_max = np.inf, -np.inf

    for start in range(0, points.shape[0], chunk):
        pts = points[start : start + chunk]
        jac = map_.jacobian(pts)
        eig = splitting.to_eigen(jac)
        cu_ok, cs_ok = eigen_cone_checks(eig, cone_width)
        cu = cu_min_stretch(eig, cone_width)
        cs = cs_max_stretch(eig, cone_width)
        with np.errstate(divide="ignore"):
            inv_cu = np.where(cu > 0.0, 1.0 / np.where(cu > 0.0, cu, 1.0), np.inf)
            inv_cs = np.where(cs > 0.0, 1.0 / np.where(cs > 0.0, cs, 1.0), np.inf)
        expansion = np.minimum(cu, inv_cs)
        neutrality = np.maximum(inv_cu, cs)
        domination = cs * inv_cu
        det = np.linalg.det(jac)
        inside = map_.in_region(pts)
        off = ~inside

        if np.any(off):
            sigma1 = min(sigma1, float(expansion[off].min()))
            sigma2 = max(sigma2, float(neutrality[off].max()))
        if np.any(inside):
            worst_in_region = max(worst_in_region, float(neutrality[inside].max()))
        domination_max = max(domination_max, float(domination.max()))
        det_min = min(det_min, float(det.min()))
        det_max = max(det_max, float(det.max()))

        checks = (
            ("A-cu", ~cu_ok),
            ("A-cs", ~cs_ok),
            ("B", off & (expansion <= 1.0)),
            ("C", off & (neutrality >= 1.0)),
            ("D", inside & (neutrality > 1.0 + delta0_max)),
            ("domination", domination > lambda_target),
            ("invertibility", det * base_sign <= 0.0),
        )
        for tag, mask in checks:
            for idx in np.flatnonzero(mask):
                violations.append(
                    (TorusPoint(float(pts[idx, 0]), float(pts[idx, 1])), tag)
                )

    diameter = _region_image_diameter(map_)
    if diameter is not None and diameter >= 1.0:
        violations.append((map_.params.center, "cube"))  # type: ignore[attr-defined]

    report = MapConditionsReport(
        sigma1=float(sigma1),
        sigma2=float(sigma2),
        delta0=max(0.0, worst_in_region - 1.0),
        cone_width=cone_width,
        violations=violations,
        grid_n=grid_n,
        lambda_target=lambda_target,
        delta0_max=delta0_max,
        domination_max=domination_max,
        det_min=det_min,
        det_max=det_max,
        region_image_diameter=diameter,
    )
    _LOGGER.info(
        "verify_conditions grid_n=%d width=%s sigma1=%.6f sigma2=%.6f delta0=%.6f violations=%d",
        grid_n,
        cone_width,
        report.sigma1,
        report.sigma2,
        report.delta0,
        len(violations),
    )
    return report


__all__ = ["CONDITION_TAGS", "MapConditionsReport", "grid_points", "verify_conditions"]
