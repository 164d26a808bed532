"""Pliss selection, hyperbolic times and curve statistics at those times."""

from .curves import check_backward_contraction, check_distortion, curve_pushforward_density
from .pliss import PlissInput, pliss_select
from .times import HyperbolicTimeReport, detect_hyperbolic_times, estimate_density

__all__ = [
    "HyperbolicTimeReport",
    "PlissInput",
    "check_backward_contraction",
    "check_distortion",
    "curve_pushforward_density",
    "detect_hyperbolic_times",
    "estimate_density",
    "pliss_select",
]
