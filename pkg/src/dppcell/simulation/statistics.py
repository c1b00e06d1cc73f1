"""Empirical summary statistics of point patterns and envelope tests."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from ..curves import CurveTable
from ..kernels import Family, KernelModel
from .patterns import PointPattern, Window

log = logging.getLogger(__name__)

__all__ = [
    "empirical_esf",
    "empirical_nn",
    "ripley_k",
    "ripley_k_single",
    "analytic_k",
    "Envelope",
    "EnvelopeResult",
    "GridMismatchError",
    "build_envelope",
    "envelope_test",
]


class GridMismatchError(ValueError):
    """Observed curve and envelope are evaluated on different abscissae."""


def _as_list(patterns) -> list:
    if isinstance(patterns, PointPattern):
        return [patterns]
    return list(patterns)


def _check_grid(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size == 0 or np.any(r < 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r grid must be non-negative and strictly increasing")
    return r


def _border(window: Window, r: np.ndarray, border: Optional[float]) -> float:
    short = min(window.width, window.height)
    b = min(float(r[-1]), 0.25 * short) if border is None else float(border)
    if b < 0 or 2 * b >= short:
        raise ValueError(f"border {b} leaves no interior in window {window}")
    return b


def empirical_esf(patterns, r, border: Optional[float] = None, grid_step: Optional[float] = None) -> CurveTable:
    """Empty-space function from test locations on a regular grid, minus-sampled by ``border``.

    The border defaults to the largest radius (capped at a quarter of the
    shorter window side) so that retained test locations see their full disk
    inside the window.  Empty patterns are skipped.
    """
    pats = _as_list(patterns)
    r = _check_grid(r)
    hits = np.zeros(r.size)
    total = 0
    skipped = 0
    for pat in pats:
        if len(pat) == 0:
            skipped += 1
            continue
        w = pat.window
        b = _border(w, r, border)
        inner = w.shrink(b)
        step = grid_step or min(inner.width, inner.height) / 48.0
        gx = np.arange(inner.x0 + 0.5 * step, inner.x1, step)
        gy = np.arange(inner.y0 + 0.5 * step, inner.y1, step)
        test = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
        d, _ = cKDTree(pat.points).query(test)
        hits += np.searchsorted(np.sort(d), r, side="right")
        total += test.shape[0]
    if skipped:
        log.info("empirical_esf skipped %d empty patterns", skipped)
    if total == 0:
        raise ValueError("no non-empty patterns")
    raw = hits / total
    return CurveTable(r, raw, raw, np.ones(r.size, bool), {"metric": "empirical_esf", "patterns": len(pats)})


def empirical_nn(patterns, r, border: Optional[float] = None) -> CurveTable:
    """Nearest-neighbour distance distribution with fixed-border minus sampling."""
    pats = _as_list(patterns)
    r = _check_grid(r)
    hits = np.zeros(r.size)
    total = 0
    skipped = 0
    for pat in pats:
        if len(pat) < 2:
            skipped += 1
            continue
        b = _border(pat.window, r, border)
        keep = pat.window.border_distance(pat.points) >= b
        if not np.any(keep):
            continue
        d, _ = cKDTree(pat.points).query(pat.points[keep], k=2)
        hits += np.searchsorted(np.sort(d[:, 1]), r, side="right")
        total += int(keep.sum())
    if skipped:
        log.info("empirical_nn skipped %d patterns with fewer than two points", skipped)
    if total == 0:
        raise ValueError("no points far enough from the border")
    raw = hits / total
    return CurveTable(r, raw, raw, np.ones(r.size, bool), {"metric": "empirical_nn", "patterns": len(pats)})


def ripley_k_single(pattern: PointPattern, r) -> np.ndarray:
    """Translation-corrected estimate of Ripley's K for one pattern."""
    r = _check_grid(r)
    n = len(pattern)
    if n < 2:
        return np.zeros(r.size)
    w = pattern.window
    tree = cKDTree(pattern.points)
    pairs = tree.query_pairs(float(r[-1]), output_type="ndarray")
    if pairs.size == 0:
        return np.zeros(r.size)
    diff = pattern.points[pairs[:, 0]] - pattern.points[pairs[:, 1]]
    d = np.hypot(diff[:, 0], diff[:, 1])
    overlap = (w.width - np.abs(diff[:, 0])) * (w.height - np.abs(diff[:, 1]))
    wts = 2.0 / overlap  # each unordered pair counts twice
    order = np.argsort(d)
    cum = np.concatenate(([0.0], np.cumsum(wts[order])))
    sums = cum[np.searchsorted(d[order], r, side="right")]
    return w.area**2 / (n * (n - 1)) * sums


def ripley_k(patterns, r) -> CurveTable:
    """Translation-corrected K averaged over patterns."""
    pats = [p for p in _as_list(patterns) if len(p) >= 2]
    if not pats:
        raise ValueError("ripley_k needs at least one pattern with two or more points")
    r = _check_grid(r)
    vals = np.mean([ripley_k_single(p, r) for p in pats], axis=0)
    return CurveTable(r, vals, vals, np.ones(r.size, bool), {"metric": "ripley_k", "patterns": len(pats)})


def analytic_k(model: KernelModel, r) -> np.ndarray:
    """Ripley's K of a stationary DPP, ``pi r^2 - (2 pi / lam^2) int_0^r t K0(t)^2 dt``."""
    r = np.asarray(r, dtype=float)
    if model.is_poisson:
        return math.pi * r**2
    if model.family is Family.GAUSS:
        a2 = model.alpha**2
        return math.pi * r**2 - 0.5 * math.pi * a2 * (-np.expm1(-2.0 * r**2 / a2))
    out = np.empty(r.size)
    flat = r.ravel()
    for i, ri in enumerate(flat):
        val, _ = integrate.quad(lambda t: t * float(model.cov_radial(np.array(t))) ** 2, 0.0, ri, limit=200)
        out[i] = math.pi * ri**2 - 2.0 * math.pi * val / model.lam**2
    return out.reshape(r.shape)


@dataclass
class Envelope:
    """Pointwise band from simulated curves; reusable across observed patterns."""

    abscissa: np.ndarray
    low: np.ndarray
    high: np.ndarray
    kind: str
    curves: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_curves(cls, abscissa, curves, kind: str = "minmax", level: float = 0.95) -> "Envelope":
        c = np.asarray(curves, dtype=float)
        if kind == "minmax":
            low, high = c.min(axis=0), c.max(axis=0)
        elif kind == "quantile":
            q = 0.5 * (1.0 - level)
            low, high = np.quantile(c, [q, 1.0 - q], axis=0)
        else:
            raise ValueError(f"unknown envelope kind {kind!r}")
        return cls(np.asarray(abscissa, float), low, high, kind, c)

    def contains(self, abscissa, values) -> "EnvelopeResult":
        x = np.asarray(abscissa, dtype=float)
        if x.shape != self.abscissa.shape or not np.allclose(x, self.abscissa, rtol=0, atol=1e-12):
            raise GridMismatchError("observed curve grid differs from the envelope grid")
        v = np.asarray(values, dtype=float)
        out = (v < self.low) | (v > self.high)
        return EnvelopeResult(not bool(out.any()), float(out.mean()), out, self)


@dataclass
class EnvelopeResult:
    passed: bool
    exceedance: float
    outside: np.ndarray
    envelope: Envelope

    def __bool__(self) -> bool:
        return self.passed


def build_envelope(patterns: Iterable[PointPattern], r, statistic: str = "K") -> Envelope:
    """Global min/max envelope of a pattern statistic over simulated patterns."""
    r = _check_grid(r)
    if statistic.upper() != "K":
        raise ValueError("pattern envelopes are available for the K function")
    curves = np.array([ripley_k_single(p, r) for p in patterns])
    return Envelope.from_curves(r, curves, "minmax")


def envelope_test(observed, r=None, *, envelope: Optional[Envelope] = None, model=None,
                  window: Optional[Window] = None, replications: int = 1000, seed: int = 0,
                  statistic: str = "K", pathloss=None) -> EnvelopeResult:
    """Check an observed pattern (or curve) against a simulation envelope.

    With ``statistic="K"`` the observed object is a PointPattern (its K
    function is computed on ``r``) or a CurveTable, and the envelope is the
    pointwise min/max over simulated patterns.  With ``statistic="coverage"``
    the observed object is a coverage CurveTable over thresholds ``r`` (dB)
    and the envelope is the 2.5%-97.5% band of simulated per-replication
    coverage.  Pass a precomputed ``envelope`` to reuse it across tests.
    """
    stat = statistic.lower()
    if stat not in ("k", "coverage"):
        raise ValueError(f"unknown statistic {statistic!r}")
    if envelope is None:
        if model is None:
            raise ValueError("need either an envelope or a model to simulate")
        from .samplers import SimConfig, sample_pattern

        if stat == "k":
            win = window or observed.window
            cfg = SimConfig(model, win, replications=replications, rng_seed=seed)
            envelope = build_envelope((sample_pattern(cfg, i) for i in range(replications)), r, "K")
        else:
            from ..analytic.pathloss import PathLossModel
            from .coverage import run_coverage

            if window is None:
                raise ValueError("coverage envelopes need a simulation window")
            cfg = SimConfig(model, window, replications=replications, rng_seed=seed)
            grid = observed.abscissa if r is None else r
            envelope = run_coverage(cfg, pathloss or PathLossModel.pure(4.0), grid).envelope()
    if isinstance(observed, PointPattern):
        grid = envelope.abscissa if r is None else _check_grid(r)
        return envelope.contains(grid, ripley_k_single(observed, grid))
    return envelope.contains(observed.abscissa, observed.value)
