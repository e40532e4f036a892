"""Scattering on asymptotically hyperbolic model manifolds.

Forward path: radial ODE solves per boundary mode, Frobenius matching at the
regular singular point, scattering eigenvalues s = f_plus / f_minus.
Closed-form path: principal-symbol predictions assembled from Gamma-factor
constants and two-dimensional reduced quadratures.  Inverse path: power-law
fits over modes, least-squares jet recovery, layer stripping.
"""

__version__ = "0.1.0"

from .errors import (
    AhscatError,
    ConvergenceError,
    GateError,
    OutOfRegionError,
    PoleError,
    PreconditionError,
)
from .specfun import SpectralPoint

__all__ = [
    "AhscatError",
    "ConvergenceError",
    "GateError",
    "OutOfRegionError",
    "PoleError",
    "PreconditionError",
    "SpectralPoint",
    "__version__",
]
