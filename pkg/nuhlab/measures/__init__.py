"""Stationary-measure estimators and the ensemble experiments built on them."""

from .basins import BasinReport, cluster_basins
from .histogram import GridHistogram, birkhoff_average, empirical_histogram, l1_distance
from .ulam import UlamOperator, stationary_density, ulam_operator

__all__ = [
    "BasinReport",
    "GridHistogram",
    "UlamOperator",
    "birkhoff_average",
    "cluster_basins",
    "empirical_histogram",
    "l1_distance",
    "stationary_density",
    "ulam_operator",
]
