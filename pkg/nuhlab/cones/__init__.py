"""Cone fields, bundle directions and curvature of cu-curves."""

from .cones import ConeParams, check_cone_invariance, in_cone
from .curvature import holder_constant, iterate_cu_curve
from .directions import CocycleTrace, cocycle_log_norms, cs_log_norms, domination_gap, estimate_direction

__all__ = [
    "CocycleTrace",
    "ConeParams",
    "check_cone_invariance",
    "cocycle_log_norms",
    "cs_log_norms",
    "domination_gap",
    "estimate_direction",
    "holder_constant",
    "in_cone",
    "iterate_cu_curve",
]
