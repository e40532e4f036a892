"""Truncated power-series arithmetic on numpy coefficient arrays.

Coefficient arrays are complex128, index = power of the expansion variable.
All operations truncate at the shorter of the operands unless an explicit
order is given.
"""

from __future__ import annotations

import numpy as np


def trim(a: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1, dtype=complex)
    m = min(order + 1, len(a))
    out[:m] = a[:m]
    return out


def mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return trim(np.convolve(a[: order + 1], b[: order + 1]), order)


def reciprocal(a: np.ndarray, order: int) -> np.ndarray:
    """Series 1/a; requires a[0] != 0."""
    if a[0] == 0:
        raise ZeroDivisionError("series reciprocal needs a nonzero constant term")
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0 / a[0]
    for m in range(1, order + 1):
        s = sum(a[i] * out[m - i] for i in range(1, min(m, len(a) - 1) + 1))
        out[m] = -s / a[0]
    return out


def compose(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """a(b(x)) with b[0] == 0 (otherwise composition is not a formal series)."""
    if abs(b[0]) != 0:
        raise ValueError("inner series must have zero constant term")
    out = np.zeros(order + 1, dtype=complex)
    out[0] = a[0]
    power = np.zeros(order + 1, dtype=complex)
    power[0] = 1.0
    for m in range(1, min(order, len(a) - 1) + 1):
        power = mul(power, trim(b, order), order)
        out += a[m] * power
    return out


def derivative(a: np.ndarray) -> np.ndarray:
    if len(a) <= 1:
        return np.zeros(1, dtype=complex)
    return a[1:] * np.arange(1, len(a))


def reversion(a: np.ndarray, order: int) -> np.ndarray:
    """Compositional inverse of a with a[0] = 0, a[1] != 0.

    Newton iteration on the truncation: find g with a(g(x)) = x + O(x^(order+1)).
    """
    if a[0] != 0 or a[1] == 0:
        raise ValueError("reversion needs a[0] = 0 and a[1] != 0")
    g = np.zeros(order + 1, dtype=complex)
    g[1] = 1.0 / a[1]
    da = derivative(trim(a, order + 1))
    x = np.zeros(order + 1, dtype=complex)
    if order >= 1:
        x[1] = 1.0
    for _ in range(order + 2):
        res = compose(trim(a, order), g, order) - x
        if not res.any():
            break
        corr = mul(res, reciprocal(compose(trim(da, order), g, order), order), order)
        g = g - corr
    return g


def evaluate(a: np.ndarray, x) -> np.ndarray:
    """Horner evaluation; x may be scalar or array."""
    acc = np.zeros_like(np.asarray(x, dtype=complex))
    for c in a[::-1]:
        acc = acc * x + c
    return acc
