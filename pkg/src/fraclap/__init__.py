"""Conformal fractional Laplacian as a Dirichlet-to-Neumann map.

Flat periodic models (spectral, singular-integral and extension routes) plus a
formal graded-series engine for the curved asymptotic identities.
"""

from fraclap.fracparams import FracParams, ParameterError, descend_ladder, gamma_ladder, make_params

__all__ = ["FracParams", "ParameterError", "descend_ladder", "gamma_ladder", "make_params"]
__version__ = "0.1.0"
