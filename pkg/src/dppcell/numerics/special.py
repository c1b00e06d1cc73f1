"""Modified Bessel function I0 and its exponentially scaled form."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["bessel_i0", "bessel_i0e", "SERIES_SWITCH"]

# The power series is evaluated up to this argument; the asymptotic
# expansion only reaches 1e-12 relative accuracy for z above roughly 17.
SERIES_SWITCH = 20.0
_SERIES_TERMS = 80
_ASYMPTOTIC_TERMS = 30


def _series(z: np.ndarray) -> np.ndarray:
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * k)
        total = total + term
    return total


def _asymptotic_scaled(z: np.ndarray) -> np.ndarray:
    # exp(-z) I0(z) ~ (2 pi z)^-1/2 sum_k ((2k-1)!!)^2 / (k! (8z)^k)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = term * (2 * k - 1) ** 2 / (k * 8.0 * z)
        total = total + term
    return total / np.sqrt(2.0 * math.pi * z)


def bessel_i0e(z) -> np.ndarray | float:
    """``exp(-z) * I0(z)`` for ``z >= 0``, safe for large arguments."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("bessel_i0e requires z >= 0")
    out = np.empty_like(z)
    low = z <= SERIES_SWITCH
    out[low] = _series(z[low]) * np.exp(-z[low])
    out[~low] = _asymptotic_scaled(z[~low])
    return float(out) if out.ndim == 0 else out


def bessel_i0(z) -> np.ndarray | float:
    """Modified Bessel function of the first kind, order zero, ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("bessel_i0 requires z >= 0")
    out = np.empty_like(z)
    low = z <= SERIES_SWITCH
    out[low] = _series(z[low])
    with np.errstate(over="ignore"):
        out[~low] = _asymptotic_scaled(z[~low]) * np.exp(z[~low])
    return float(out) if out.ndim == 0 else out
