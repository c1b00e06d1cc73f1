"""Point patterns and observation windows."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["Window", "PointPattern"]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in km."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate window {self}")

    @classmethod
    def square(cls, side: float, origin: tuple = (0.0, 0.0)) -> "Window":
        return cls(origin[0], origin[0] + side, origin[1], origin[1] + side)

    @classmethod
    def parse(cls, value) -> "Window":
        if isinstance(value, Window):
            return value
        if isinstance(value, str):
            parts = [float(p) for p in value.replace("x", ",").split(",")]
        else:
            parts = [float(p) for p in value]
        if len(parts) == 2:
            return cls(0.0, parts[0], 0.0, parts[1])
        if len(parts) == 4:
            return cls(*parts)
        raise ValueError(f"window needs 2 (width, height) or 4 (x0, x1, y0, y1) numbers, got {value!r}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)])

    def contains(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return (p[:, 0] >= self.x0) & (p[:, 0] <= self.x1) & (p[:, 1] >= self.y0) & (p[:, 1] <= self.y1)

    def expand(self, margin: float) -> "Window":
        return Window(self.x0 - margin, self.x1 + margin, self.y0 - margin, self.y1 + margin)

    def shrink(self, border: float) -> "Window":
        return self.expand(-border)

    def border_distance(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.minimum.reduce([p[:, 0] - self.x0, self.x1 - p[:, 0], p[:, 1] - self.y0, self.y1 - p[:, 1]])

    def as_list(self) -> list:
        return [self.x0, self.x1, self.y0, self.y1]


@dataclass(frozen=True)
class PointPattern:
    """Finite planar point set observed in a rectangular window."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if pts.size and not np.all(self.window.contains(pts)):
            raise ValueError("all points must lie inside the window")
        if pts.shape[0] > 1 and np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("duplicate coordinates in point pattern")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def intensity(self) -> float:
        return len(self) / self.window.area

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x_km", "y_km"])
            for x, y in self.points:
                writer.writerow([repr(float(x)), repr(float(y))])
