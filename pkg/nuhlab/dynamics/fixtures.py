"""Synthetic maps with known answers, used to validate the measure tools.

These are not hyperbolic and exist only so that estimators such as basin
clustering have a fixture whose correct output is known by construction.
"""

from __future__ import annotations

from typing import Any, Dict

import numpy as np
from numpy.typing import ArrayLike

from .torus import FloatArray, as_points, wrap


class TwoAttractorMap:
    """Contract halfway toward (0.25, 0.25) on ``x < 1/2``, else (0.75, 0.75).

    Both attracting points sit in the interior of their half with margin
    0.25, so noise of radius below 0.125 never carries an orbit across.
    """

    left = np.array([0.25, 0.25])
    right = np.array([0.75, 0.75])
    rate = 0.5

    def apply_lift(self, p: ArrayLike) -> FloatArray:
        pts = as_points(p)
        target = np.where((pts[..., 0] < 0.5)[..., None], self.left, self.right)
        return pts + self.rate * (target - pts)

    def apply(self, p: ArrayLike) -> FloatArray:
        return wrap(self.apply_lift(wrap(p)))

    def jacobian(self, p: ArrayLike) -> FloatArray:
        pts = as_points(p)
        return np.broadcast_to(self.rate * np.eye(2), pts.shape[:-1] + (2, 2)).copy()

    def describe(self) -> Dict[str, Any]:
        return {"kind": "two-attractor"}


__all__ = ["TwoAttractorMap"]
