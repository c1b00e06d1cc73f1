"""Path-loss functions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PathLossKind", "PathLossModel", "DivergentInterference"]


class DivergentInterference(ValueError):
    """Raised when the mean interference integral does not converge."""


class PathLossKind(str, enum.Enum):
    BOUNDED = "bounded"
    PURE = "pure"


@dataclass(frozen=True)
class PathLossModel:
    """``l(r) = min(1, r^-beta)`` (bounded) or ``r^-beta`` (pure power)."""

    kind: PathLossKind = PathLossKind.PURE
    beta: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PathLossKind(self.kind))
        if not self.beta > 2:
            raise DivergentInterference(f"path-loss exponent must exceed 2, got {self.beta}")

    @classmethod
    def bounded(cls, beta: float = 4.0) -> "PathLossModel":
        return cls(PathLossKind.BOUNDED, beta)

    @classmethod
    def pure(cls, beta: float = 4.0) -> "PathLossModel":
        return cls(PathLossKind.PURE, beta)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.power(r, -self.beta)
        if self.kind is PathLossKind.BOUNDED:
            out = np.minimum(1.0, out)
        return out

    def outer_integral(self, r0: float) -> float:
        """``int_{|x| >= r0} l(x) dx`` in closed form."""
        b = self.beta
        if self.kind is PathLossKind.PURE:
            if r0 <= 0:
                raise DivergentInterference("pure power-law path loss is not integrable at the origin")
            return 2 * math.pi * r0 ** (2 - b) / (b - 2)
        if r0 >= 1:
            return 2 * math.pi * r0 ** (2 - b) / (b - 2)
        return math.pi * (1 - r0 * r0) + 2 * math.pi / (b - 2)
