"""Samplers for stationary DPPs, Poisson processes and perturbed hexagonal grids.

The DPP sampler uses the spectral construction on a torus: the window is
extended by a margin and treated as periodic, the kernel is expanded in the
Fourier basis ``exp(2 pi i k.x / L)`` with eigenvalues ``phi(k / L)``, each
mode is kept independently with probability equal to its eigenvalue, and the
resulting projection DPP is sampled point by point (each new point drawn from
the conditional density by rejection from the uniform law, with the
selected eigenfunctions orthogonalised against those already placed).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..kernels import KernelModel
from .patterns import PointPattern, Window

__all__ = [
    "HexGrid",
    "SimConfig",
    "SimConfigError",
    "sample_dpp",
    "sample_ppp",
    "sample_hex_perturbed",
    "sample_pattern",
    "sample_many",
    "replication_rng",
    "spectral_modes",
]

log = logging.getLogger(__name__)

SPECTRAL_MASS_TOL = 1e-4


class SimConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass(frozen=True)
class HexGrid:
    """Hexagonal grid with cell radius ``cell_radius`` (km), perturbed by up to ``eta * r``."""

    eta: float = 0.5
    cell_radius: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise SimConfigError(f"eta must be in [0, 1], got {self.eta}")
        if not self.cell_radius > 0:
            raise SimConfigError("cell_radius must be positive")

    @classmethod
    def from_intensity(cls, lam: float, eta: float = 0.5) -> "HexGrid":
        # one point per hexagon of area (3 sqrt(3) / 2) r^2
        return cls(eta, math.sqrt(2.0 / (3.0 * math.sqrt(3.0) * lam)))

    @property
    def lam(self) -> float:
        return 2.0 / (3.0 * math.sqrt(3.0) * self.cell_radius**2)

    @property
    def scale(self) -> float:
        return self.cell_radius


@dataclass(frozen=True)
class SimConfig:
    """Simulation request.

    ``margin`` is the buffer (km) added around the window before sampling
    and cropped afterwards; by default 3 alpha for DPPs, two cell radii for
    hexagonal grids and zero for Poisson.
    """

    model: Union[KernelModel, HexGrid]
    window: Window
    replications: int = 1
    rng_seed: int = 0
    margin: Optional[float] = None
    max_modes_per_axis: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "window", Window.parse(self.window))
        if self.replications < 1:
            raise SimConfigError("replications must be >= 1")
        if self.margin is None:
            if isinstance(self.model, HexGrid):
                m = 2.0 * self.model.cell_radius
            elif self.model.is_poisson:
                m = 0.0
            else:
                m = 3.0 * self.model.alpha
            object.__setattr__(self, "margin", m)
        if self.margin < 0:
            raise SimConfigError("margin must be >= 0")

    @property
    def lam(self) -> float:
        return self.model.lam


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent generator for replication ``rep`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep)]))


def spectral_modes(model: KernelModel, lx: float, ly: float, max_per_axis: int = 1024):
    """Frequencies ``k / L`` and eigenvalues in the smallest box holding all but 1e-4 of the mass."""
    total = model.lam * lx * ly
    n = 4
    while True:
        if n > max_per_axis:
            raise SimConfigError(
                f"spectral truncation at {max_per_axis} modes per axis leaves more than "
                f"{SPECTRAL_MASS_TOL:g} of the spectral mass; increase max_modes_per_axis"
            )
        kx = np.arange(-n, n + 1) / lx
        ky = np.arange(-n, n + 1) / ly
        fx, fy = np.meshgrid(kx, ky, indexing="ij")
        eig = model.spectral_radial(np.hypot(fx, fy))
        if eig.sum() >= (1.0 - SPECTRAL_MASS_TOL) * total:
            break
        n = int(n * 1.5) + 1
    # shrink to the smallest symmetric box that still captures the mass
    size = n
    while size > 1:
        inner = eig[n - size + 1 : n + size, n - size + 1 : n + size]
        if inner.sum() < (1.0 - SPECTRAL_MASS_TOL) * total:
            break
        size -= 1
    sl = slice(n - size, n + size + 1)
    freqs = np.stack((fx[sl, sl].ravel(), fy[sl, sl].ravel()), axis=-1)
    return freqs, np.clip(eig[sl, sl].ravel(), 0.0, 1.0)


def _sample_projection(freqs: np.ndarray, origin: np.ndarray, size: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample the projection DPP spanned by Fourier modes ``freqs`` on a torus."""
    n = freqs.shape[0]
    if n == 0:
        return np.empty((0, 2))
    basis = np.zeros((n, n), dtype=complex)  # orthonormal rows in mode space
    pts = np.empty((n, 2))
    two_pi_f = 2.0 * math.pi * freqs
    for i in range(n):
        remaining = n - i
        while True:
            batch = max(4, int(math.ceil(3.0 * n / remaining)))
            cand = origin + rng.random((batch, 2)) * size
            v = np.exp(1j * (cand @ two_pi_f.T)) / math.sqrt(n)  # unit-norm feature vectors
            if i:
                proj = v @ basis[:i].conj().T
                accept = 1.0 - np.sum(np.abs(proj) ** 2, axis=1)
            else:
                accept = np.ones(batch)
            # conditional density relative to its bound n / |W|
            ok = np.nonzero(rng.random(batch) < accept)[0]
            if ok.size:
                j = ok[0]
                break
        pts[i] = cand[j]
        vec = v[j]
        if i:
            vec = vec - (basis[:i] @ vec.conj()).conj() @ basis[:i]
        basis[i] = vec / np.linalg.norm(vec)
    return pts


def sample_dpp(config: SimConfig, rep: int = 0) -> PointPattern:
    """One realisation of a stationary DPP (or Poisson) model in ``config.window``."""
    model = config.model
    if isinstance(model, HexGrid):
        raise SimConfigError("use sample_hex_perturbed for hexagonal grids")
    if model.is_poisson:
        return sample_ppp(config, rep)
    rng = replication_rng(config.rng_seed, rep)
    ext = config.window.expand(config.margin)
    freqs, eig = spectral_modes(model, ext.width, ext.height, config.max_modes_per_axis)
    chosen = freqs[rng.random(eig.size) < eig]
    origin = np.array([ext.x0, ext.y0])
    size = np.array([ext.width, ext.height])
    pts = _sample_projection(chosen, origin, size, rng)
    keep = config.window.contains(pts)
    return PointPattern(pts[keep], config.window)


def sample_ppp(config: SimConfig, rep: int = 0) -> PointPattern:
    rng = replication_rng(config.rng_seed, rep)
    w = config.window
    n = rng.poisson(config.lam * w.area)
    pts = np.column_stack((w.x0 + w.width * rng.random(n), w.y0 + w.height * rng.random(n)))
    return PointPattern(pts, w)


def _triangular_lattice(window: Window, spacing: float, shift: np.ndarray) -> np.ndarray:
    a1 = np.array([spacing, 0.0])
    a2 = np.array([0.5 * spacing, 0.5 * math.sqrt(3.0) * spacing])
    rows = int(math.ceil(window.height / a2[1])) + 2
    cols = int(math.ceil(window.width / spacing)) + rows + 2
    i, j = np.meshgrid(np.arange(-cols, cols + 1), np.arange(-1, rows + 1), indexing="ij")
    pts = i.ravel()[:, None] * a1 + j.ravel()[:, None] * a2
    pts = pts + np.array([window.x0, window.y0]) + shift
    return pts[window.contains(pts)]


def sample_hex_perturbed(config: SimConfig, rep: int = 0) -> PointPattern:
    """Hexagonal grid with each point moved by ``U(0, eta r)`` in a ``U(0, 2 pi)`` direction.

    The lattice receives a uniform random translation over one unit cell so
    that the generated process is stationary.
    """
    grid = config.model
    if not isinstance(grid, HexGrid):
        raise SimConfigError("sample_hex_perturbed needs a HexGrid model")
    rng = replication_rng(config.rng_seed, rep)
    spacing = math.sqrt(3.0) * grid.cell_radius
    cell = np.array([[spacing, 0.0], [0.5 * spacing, 0.5 * math.sqrt(3.0) * spacing]])
    shift = rng.random(2) @ cell
    ext = config.window.expand(config.margin)
    pts = _triangular_lattice(ext, spacing, shift)
    dist = rng.random(pts.shape[0]) * grid.eta * grid.cell_radius
    ang = rng.random(pts.shape[0]) * 2.0 * math.pi
    pts = pts + np.column_stack((dist * np.cos(ang), dist * np.sin(ang)))
    return PointPattern(pts[config.window.contains(pts)], config.window)


def sample_pattern(config: SimConfig, rep: int = 0) -> PointPattern:
    if isinstance(config.model, HexGrid):
        return sample_hex_perturbed(config, rep)
    return sample_dpp(config, rep)


def sample_many(config: SimConfig, threads: Optional[int] = 1, start: int = 0) -> list:
    """Replications ``start .. start + config.replications - 1`` in index order."""
    from ..parallel import map_ordered

    idx = range(start, start + config.replications)
    return map_ordered(lambda i: sample_pattern(config, i), idx, threads)
