"""Radially symmetric weights and planar radial quadrature."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["RadialWeight", "gl_panels", "radial_integral", "RadialProposal"]

# log-radius span used for unbounded supports (r up to e^60 times the start)
TAIL_LOG_SPAN = 60.0


@functools.lru_cache(maxsize=16)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gl_panels(edges, nodes_per_panel: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(int(nodes_per_panel))
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


@dataclass(frozen=True)
class RadialWeight:
    """A weight ``w(x) = func(|x|)`` supported on ``lo <= |x| < hi``.

    ``breaks`` lists radii where ``func`` is not smooth. ``tail`` optionally
    gives the planar integral of ``w`` over ``|x| > R`` in closed form; it is
    used to choose truncation radii for unbounded supports.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lo: float = 0.0
    hi: float = math.inf
    breaks: tuple = ()
    tail: Optional[Callable[[float], float]] = None
    label: str = "w"
    upper: float = field(default=1.0)

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        inside = (rho >= self.lo) & (rho < self.hi)
        out = np.zeros_like(rho)
        if np.any(inside):
            out[inside] = self.func(rho[inside])
        return out

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.hi)

    def edges(self, upto: Optional[float] = None) -> list:
        hi = self.hi if upto is None else min(self.hi, upto)
        pts = [self.lo] + [b for b in self.breaks if self.lo < b < hi] + [hi]
        return pts

    def tail_mass(self, radius: float) -> float:
        """Planar integral of ``w`` over ``|x| > radius``."""
        if radius >= self.hi:
            return 0.0
        if self.tail is not None:
            return float(self.tail(radius))
        start = max(radius, self.lo)
        pieces = [p for p in self.edges() if p > start]
        total = 0.0
        a = start
        for b in pieces:
            total += self._piece_integral(a, b)
            a = b
        return total

    def _piece_integral(self, a: float, b: float) -> float:
        # planar integral over a <= |x| < b; in t = log r the integrand
        # 2 pi r^2 w(r) of a power-law tail decays exponentially
        if b <= a:
            return 0.0
        if a <= 0.0:
            head = min(b, 1e-3) if math.isinf(b) else b
            r, w = gl_panels(np.linspace(0.0, head, 9), 16)
            total = float(np.sum(w * 2 * math.pi * r * self.func(r)))
            return total + (self._piece_integral(head, b) if head < b else 0.0)
        t0 = math.log(a)
        t1 = t0 + TAIL_LOG_SPAN if math.isinf(b) else math.log(b)
        n = max(4, int(math.ceil((t1 - t0) / 0.5)))
        t, w = gl_panels(np.linspace(t0, t1, n + 1), 16)
        r = np.exp(t)
        return float(np.sum(w * 2 * math.pi * r * r * self.func(r)))

    def truncation_radius(self, lam: float, tol: float) -> float:
        """Smallest radius (up to a factor 1.05) with ``lam * tail_mass < tol``."""
        if self.bounded:
            return self.hi
        r = max(1.0, 2.0 * max([self.lo] + list(self.breaks)))
        while lam * self.tail_mass(r) >= tol:
            r *= 2.0
            if r > 1e7:
                raise ValueError(f"weight {self.label} has a non-integrable tail")
        lo = r / 2.0
        while r / lo > 1.05:
            mid = math.sqrt(lo * r)
            if lam * self.tail_mass(mid) < tol:
                r = mid
            else:
                lo = mid
        return max(r, max([self.lo] + list(self.breaks)))

    # constructors
    @classmethod
    def disk(cls, radius: float) -> "RadialWeight":
        return cls(lambda r: np.ones_like(r), 0.0, float(radius), (), None, f"disk({radius:g})")

    @classmethod
    def annulus(cls, inner: float, outer: float, func=None) -> "RadialWeight":
        f = func if func is not None else (lambda r: np.ones_like(r))
        return cls(f, float(inner), float(outer), (), None, f"annulus({inner:g},{outer:g})")

    @classmethod
    def zero(cls) -> "RadialWeight":
        return cls(lambda r: np.zeros_like(r), 0.0, 0.0, (), None, "zero")


def radial_integral(func, edges, nodes_per_panel: int = 32, max_panel: Optional[float] = None) -> float:
    """``int 2 pi r func(r) dr`` over consecutive finite ``edges``."""
    fine = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = 1 if max_panel is None else max(1, int(math.ceil((b - a) / max_panel)))
        fine.extend(np.linspace(a, b, k + 1)[1:])
    r, w = gl_panels(fine, nodes_per_panel)
    return float(np.sum(w * 2 * math.pi * r * func(r)))


class RadialProposal:
    """Importance sampler for points in the plane with a radial density.

    With ``mapping="weighted"`` the radius is drawn (by inverse CDF on a
    fine grid in ``rho^2``) with density approximately proportional to the
    weight, so that ``lam * w / q`` is nearly constant. ``mapping="square"``
    maps the unit square linearly onto ``(rho, theta)`` over the support.
    Either way the exact density ``q`` of the mapped point is returned, so
    ratios ``w / q`` are exact and the estimator is unbiased.
    """

    def __init__(self, weight: RadialWeight, radius: float, mapping: str = "weighted", grid: int = 4096):
        self.weight = weight
        self.lo = weight.lo
        self.hi = min(weight.hi, radius)
        self.mapping = mapping
        if mapping == "square":
            if not math.isfinite(self.hi):
                raise ValueError("square mapping needs a bounded support")
            return
        if mapping != "weighted":
            raise ValueError(f"unknown mapping {mapping!r}")
        lo, hi = self.lo, self.hi
        pts = [np.linspace(lo, hi, grid + 1)]
        if hi > 0:
            pts.append(np.geomspace(max(lo, hi * 1e-6), hi, grid + 1))
        pts.append(np.array([b for b in weight.breaks if lo < b < hi]))
        rho = np.unique(np.concatenate(pts))
        rho = rho[(rho >= lo) & (rho <= hi)]
        t = rho * rho
        mid = np.sqrt(0.5 * (t[:-1] + t[1:]))
        mass = math.pi * np.diff(t) * weight(mid)
        if not np.any(mass > 0):
            raise ValueError("weight has no mass on its support")
        self._t = t
        self._mass = mass
        self._cum = np.concatenate(([0.0], np.cumsum(mass)))
        self._total = self._cum[-1]

    def sample(self, u_rho: np.ndarray, u_theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map uniforms to planar points; returns ``(points, density)``."""
        theta = 2.0 * math.pi * u_theta
        if self.mapping == "square":
            rho = self.lo + (self.hi - self.lo) * u_rho
            q = 1.0 / (2.0 * math.pi * np.maximum(rho, 1e-300) * (self.hi - self.lo))
        else:
            m = u_rho * self._total
            k = np.searchsorted(self._cum, m, side="right") - 1
            k = np.clip(k, 0, self._mass.size - 1)
            frac = (m - self._cum[k]) / self._mass[k]
            t = self._t[k] + np.clip(frac, 0.0, 1.0) * (self._t[k + 1] - self._t[k])
            rho = np.sqrt(t)
            q = self._mass[k] / (self._total * math.pi * (self._t[k + 1] - self._t[k]))
        pts = np.stack((rho * np.cos(theta), rho * np.sin(theta)), axis=-1)
        return pts, q
