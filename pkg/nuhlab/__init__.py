# nuhlab/__init__.py
# =============================================================================
# Purpose:
#   Package root for the numerical laboratory of non-uniformly hyperbolic
#   torus maps. Enables `python -m nuhlab.cli` and relative imports.
# =============================================================================
"""nuhlab package root."""

__version__ = "0.1.0"
