"""Determinants of kernel Gram matrices."""

from __future__ import annotations

import numpy as np

__all__ = ["psd_det", "NumericError"]

CLAMP_RTOL = 1e-12


class NumericError(ArithmeticError):
    """Raised on non-finite input to a numerical kernel."""


def psd_det(gram) -> np.ndarray | float:
    """Determinant of one or a stack of symmetric PSD Gram matrices.

    Uses partial-pivoting LU. Exact Gram matrices of a valid kernel are PSD,
    so small negative round-off (down to ``-1e-12 * scale`` with ``scale``
    the product of the diagonal) is clamped to zero.
    """
    g = np.asarray(gram, dtype=float)
    if g.ndim < 2 or g.shape[-1] != g.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("Gram matrix has non-finite entries")
    n = g.shape[-1]
    if n == 0:
        out = np.ones(g.shape[:-2])
    else:
        out = np.linalg.det(g)
        scale = np.prod(np.abs(np.diagonal(g, axis1=-2, axis2=-1)), axis=-1)
        out = np.where((out < 0) & (out >= -CLAMP_RTOL * scale), 0.0, out)
    return float(out) if out.ndim == 0 else out
