"""Tagged failure modes.

All constants and recovery routines raise typed errors instead of returning
non-finite numbers, so the discrete exceptional parameter sets become
explicit and testable.
"""


class AhscatError(Exception):
    """Base class for all package errors."""


class PreconditionError(AhscatError):
    """An input violates a structural hypothesis (e.g. 2*zeta integral)."""


class PoleError(AhscatError):
    """A Gamma factor or normalization constant is evaluated at a pole."""


class OutOfRegionError(AhscatError):
    """Spectral parameter outside the absolute-convergence region."""


class GateError(AhscatError):
    """A solvability gate failed; recovery would be unstable."""


class ConvergenceError(AhscatError):
    """A quadrature, ODE solve or fit failed to reach its tolerance."""
