"""Torus phase space, the linear Anosov base and the DA family.

``verify_conditions`` lives in :mod:`nuhlab.dynamics.conditions` and is not
re-exported here because it depends on :mod:`nuhlab.cones`.
"""

from .maps import (
    CAT_MAP,
    DAMap,
    DAParams,
    LinearAnosovMap,
    SelfMap,
    Splitting,
    TorusMap,
    inverse_apply,
    jacobian,
    make_da_map,
)
from .fixtures import TwoAttractorMap
from .torus import Mat2, TorusPoint, apply_linear, torus_distance, wrap

__all__ = [
    "CAT_MAP",
    "DAMap",
    "DAParams",
    "LinearAnosovMap",
    "Mat2",
    "SelfMap",
    "Splitting",
    "TorusMap",
    "TorusPoint",
    "TwoAttractorMap",
    "apply_linear",
    "inverse_apply",
    "jacobian",
    "make_da_map",
    "torus_distance",
    "wrap",
]
