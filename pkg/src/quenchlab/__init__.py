"""Contour expansions, disorder concentration, and phase-stability
estimates for lattice spin systems with weak quenched randomness."""

__version__ = "0.1.0"
