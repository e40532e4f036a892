"""Closed-form principal-symbol predictions.

The scattering operator S has principal symbol c_scatter * |xi|^(2 zeta - n).
For two structures whose data agree to order k at the boundary, the
difference S_1 - S_2 has order 2 Re zeta - n - k and principal symbol

    A1 sum_ij H_ij xi_i xi_j |xi|^(2 zeta - n - k - 2)
      + A2 (W - (1/4) k (n-k) T) |xi|^(2 zeta - n - k),

with H = h0^{-1} L h0^{-1}, T = trace(h0^{-1} L), and |xi| the covector
length induced by h0.  These predictions are compared per mode against the
ODE engine; the two normalization conventions differ by one global
mode-independent factor which is fitted, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PreconditionError
from .specfun import SpectralPoint, a_coeffs, c_scatter


@dataclass(frozen=True)
class SymbolValue:
    """A homogeneous symbol: order and pointwise evaluation on covectors."""

    order: complex
    coefficient_at: Callable[[np.ndarray], complex]
    metadata: str = ""

    def __call__(self, xi) -> complex:
        return self.coefficient_at(np.asarray(xi, dtype=float))


def _covector_norm(h0: np.ndarray, xi: np.ndarray) -> float:
    v = float(np.real(xi @ np.linalg.solve(h0, xi)))
    if v <= 0:
        raise PreconditionError("covector must be nonzero")
    return v ** 0.5


def principal_symbol_S(sp: SpectralPoint, h0: np.ndarray, xi) -> complex:
    """c_scatter(sp) * |xi|_{h0}^(2 zeta - n)."""
    xi = np.asarray(xi, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    return c_scatter(sp) * _covector_norm(h0, xi) ** (2 * sp.zeta - sp.n)


def principal_symbol_diff(k: int, sp: SpectralPoint, h0: np.ndarray,
                          L: np.ndarray, W: complex, xi) -> complex:
    """Principal symbol of the order-k difference, literally as displayed."""
    xi = np.asarray(xi, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    L = np.asarray(L, dtype=float)
    n = sp.n
    ac = a_coeffs(k, sp)
    h0invL = np.linalg.solve(h0, L)
    H = h0invL @ np.linalg.inv(h0)
    T = np.trace(h0invL)
    norm = _covector_norm(h0, xi)
    aniso = ac.A1 * (xi @ H @ xi) * norm ** (2 * sp.zeta - n - k - 2)
    iso = ac.A2 * (W - 0.25 * k * (n - k) * T) * norm ** (2 * sp.zeta - n - k)
    return aniso + iso


def symbol_diff_value(k: int, sp: SpectralPoint, h0, L, W) -> SymbolValue:
    return SymbolValue(order=2 * sp.zeta - sp.n - k,
                       coefficient_at=lambda xi: principal_symbol_diff(k, sp, h0, L, W, xi),
                       metadata=f"difference symbol, order k={k}")


def predicted_mode_difference(k: int, sp: SpectralPoint, h0, L, W, mode) -> complex:
    """Large-|j| prediction for d s_j / d eps: the symbol evaluated at xi = j."""
    j = np.asarray(mode, dtype=float)
    if not np.any(j):
        raise PreconditionError("mode must be nonzero")
    return principal_symbol_diff(k, sp, h0, L, W, j)


def order_bookkeeping(k: int, sp: SpectralPoint) -> float:
    """Expected log-log slope of mode differences: 2 Re zeta - n - k."""
    return 2 * sp.zeta.real - sp.n - k


def blackhole_symbol_diff(k: int, lam: float, H: np.ndarray, W: complex, xi) -> complex:
    """Difference symbol on the sphere: the trace term is absent here.

    Evaluated at the spectral point zeta = n/2 + i lambda (n = 2); the
    coefficient integrals converge absolutely only off the physical line, so
    real lam is out of region and reported as such.
    """
    n = 2
    sp = SpectralPoint(zeta=n / 2 + 1j * lam, n=n)
    ac = a_coeffs(k, sp)
    xi = np.asarray(xi, dtype=float)
    H = np.asarray(H, dtype=float)
    norm = float(np.linalg.norm(xi))
    if norm == 0:
        raise PreconditionError("covector must be nonzero")
    return (ac.A1 * (xi @ H @ xi) * norm ** (2 * sp.zeta - n - k - 2)
            + ac.A2 * W * norm ** (2 * sp.zeta - n - k))
