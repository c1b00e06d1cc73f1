"""Deterministic Sobol streams for QMC integration."""

from __future__ import annotations

import functools

import numpy as np
from scipy.stats import qmc

__all__ = ["SobolStream", "SobolConfigError", "sobol_next_batch", "sobol_block", "MAX_DIMENSION"]

# scipy ships Joe-Kuo direction numbers up to this dimension
MAX_DIMENSION = 21201


class SobolConfigError(ValueError):
    """Raised for dimensions beyond the available direction numbers."""


class SobolStream:
    """Unscrambled Sobol sequence with the origin point skipped.

    Repeated calls to :meth:`next_batch` continue the sequence, so two
    streams built with the same dimension always produce identical points.
    """

    def __init__(self, dimension: int, start: int = 0):
        if not isinstance(dimension, (int, np.integer)) or dimension < 1:
            raise SobolConfigError(f"dimension must be a positive integer, got {dimension!r}")
        if dimension > MAX_DIMENSION:
            raise SobolConfigError(
                f"dimension {dimension} exceeds the {MAX_DIMENSION} available direction numbers"
            )
        self.dimension = int(dimension)
        self._engine = qmc.Sobol(self.dimension, scramble=False)
        self._engine.fast_forward(1 + int(start))
        self.index = int(start)

    def next_batch(self, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        self.index += int(count)
        return self._engine.random(int(count))


def sobol_next_batch(stream: SobolStream, count: int) -> np.ndarray:
    return stream.next_batch(count)


@functools.lru_cache(maxsize=8)
def _cached_block(dimension: int, count: int) -> np.ndarray:
    block = SobolStream(dimension).next_batch(count)
    block.setflags(write=False)
    return block


def sobol_block(dimension: int, count: int) -> np.ndarray:
    """First ``count`` points (after the origin) of the ``dimension``-d stream.

    The result is cached and read-only; orders of a series project onto its
    leading coordinates.
    """
    SobolStream(dimension)  # validates dimension
    return _cached_block(int(dimension), int(count))
