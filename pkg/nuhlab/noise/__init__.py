"""Additive disk noise, RNG streams and random orbits."""

from .model import NoiseModel, RngStream, SeedPlan, sample_noise
from .orbits import NondegeneracyReport, RandomOrbit, check_nondegeneracy, random_orbit

__all__ = [
    "NoiseModel",
    "NondegeneracyReport",
    "RandomOrbit",
    "RngStream",
    "SeedPlan",
    "check_nondegeneracy",
    "random_orbit",
    "sample_noise",
]
