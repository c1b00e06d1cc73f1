"""Fredholm-determinant evaluation of DPP generating functionals.

For a weight ``w`` with values in [0, 1] the generating functional of a DPP
with kernel ``K`` is ``E prod (1 - w(x)) = det(I - sqrt(w) K sqrt(w))``,
which is the resummed determinantal series. The determinant is discretised
by Nystrom quadrature on a polar grid: Gauss-Legendre panels in the radius
and an equispaced angular rule. A stationary isotropic kernel on that grid
is block-circulant in the angle, so the angular DFT splits the operator
into one radial block per Fourier mode.

A reduced-Palm kernel ``K - k k^T / lam`` (anchor at ``x0``) is a rank-one
update of the stationary kernel, handled by the matrix determinant lemma.

Beyond a near radius where ``w`` is small the remaining annulus is folded in
with the local (Szego) approximation
``log det ~ int dx int dxi log(1 - w(x) phi(xi))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import linalg

from ..kernels import KernelModel, PalmKernel
from .linalg import NumericError
from .radial import RadialWeight, gl_panels

__all__ = ["FredholmOperator", "FredholmResult", "fredholm_pgfl", "far_field_log", "near_radius"]

MODE_DROP = 1e-16


@dataclass
class FredholmResult:
    value: float
    log_value: float
    near_radius: float
    far_log: float
    n_radial: int
    n_theta: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _panel_edges(edges, width: float) -> np.ndarray:
    fine = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        k = max(1, int(math.ceil((b - a) / width)))
        fine.extend(np.linspace(a, b, k + 1)[1:])
    return np.asarray(fine)


def _radial_nodes(edges, width: float, per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    return gl_panels(_panel_edges(edges, width), per_panel)


def _angular_modes(model: KernelModel, ra: np.ndarray, rb: np.ndarray, n_theta: int) -> np.ndarray:
    """``kappa_m(ra_i, rb_j) = sum_c K0(d(ra_i, rb_j, theta_c)) cos(m theta_c)``.

    Returned with shape ``(n_theta // 2 + 1, len(ra), len(rb))``.
    """
    cos_t = np.cos(2.0 * math.pi * np.arange(n_theta) / n_theta)
    out = np.empty((n_theta // 2 + 1, ra.size, rb.size))
    rows = max(1, int(4_000_000 // max(1, rb.size * n_theta)))
    for lo in range(0, ra.size, rows):
        a = ra[lo : lo + rows, None, None]
        b = rb[None, :, None]
        d2 = a * a + b * b - 2.0 * a * b * cos_t
        k = model.cov_radial(np.sqrt(np.maximum(d2, 0.0)))
        out[:, lo : lo + rows, :] = np.moveaxis(np.fft.rfft(k, axis=-1).real, -1, 0)
    return out


class FredholmOperator:
    """Polar Nystrom discretisation of a stationary kernel on a disk.

    Parameters
    ----------
    model : KernelModel
        Stationary (non-Poisson) model.
    edges : sequence of float
        Radii where the weights may be discontinuous, starting at the inner
        radius and ending at the near radius.
    anchor_radius : float, optional
        If given, the reduced-Palm kernel at ``(anchor_radius, 0)`` is used.
    """

    def __init__(
        self,
        model: KernelModel,
        edges,
        anchor_radius: Optional[float] = None,
        *,
        panel_width: Optional[float] = None,
        nodes_per_panel: int = 10,
        n_theta: Optional[int] = None,
    ):
        if model.is_poisson:
            raise ValueError("Fredholm evaluation needs a DPP kernel; Poisson is closed form")
        self.model = model
        width = panel_width if panel_width is not None else 0.5 * model.alpha
        self.rho, gw = _radial_nodes(list(edges), width, nodes_per_panel)
        self.panel_edges = _panel_edges(list(edges), width)
        r_max = float(edges[-1])
        if anchor_radius is not None:
            r_max = max(r_max, anchor_radius)
        if n_theta is None:
            m_max = 12.0 * r_max / model.alpha + 8.0
            n_theta = max(32, 1 << int(math.ceil(math.log2(2.0 * m_max))))
        self.n_theta = int(n_theta)
        self.area = gw * self.rho * (2.0 * math.pi / self.n_theta)
        self.modes = _angular_modes(model, self.rho, self.rho, self.n_theta)
        self.anchor_radius = anchor_radius
        if anchor_radius is not None:
            self.anchor_modes = _angular_modes(model, self.rho, np.array([float(anchor_radius)]), self.n_theta)[:, :, 0]
        else:
            self.anchor_modes = None
        mult = np.full(self.modes.shape[0], 2.0)
        mult[0] = 1.0
        if self.n_theta % 2 == 0:
            mult[-1] = 1.0
        self.mult = mult
        # Radial nodes are sorted, and high angular modes only live at large
        # radii: record where each mode becomes significant (weights <= 1,
        # so this bound holds for every weight passed later).
        diag = np.abs(np.diagonal(self.modes, axis1=1, axis2=2)) * self.area
        significant = diag > MODE_DROP
        self.first = np.where(significant.any(axis=1), np.argmax(significant, axis=1), self.rho.size)

    def log_pgfl(self, w_nodes: np.ndarray, upto: Optional[float] = None) -> float:
        """``log det(I - sqrt(w) K sqrt(w))`` for weights at the radial nodes.

        With ``upto`` only nodes with radius below it are used (the operator
        restricted to a smaller disk); it should be one of the panel edges.
        """
        w = np.asarray(w_nodes, dtype=float)
        if upto is not None:
            w = np.where(self.rho < upto, w, 0.0)
        if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
            raise ValueError("weights must lie in [0, 1]")
        d = np.sqrt(np.clip(w, 0.0, 1.0) * self.area)
        nz = np.nonzero(d)[0]
        stop = int(nz[-1]) + 1 if nz.size else 0
        logdet = 0.0
        quad = 0.0
        lam = self.model.lam
        for m in range(self.modes.shape[0]):
            k = self.first[m]
            if k >= stop:
                continue
            dk = d[k:stop]
            mat = np.eye(dk.size) - self.modes[m, k:stop, k:stop] * dk[:, None] * dk[None, :]
            try:
                cf = linalg.cho_factor(mat, lower=True, check_finite=False)
                ld = 2.0 * float(np.sum(np.log(np.diagonal(cf[0]))))
                solve = lambda v: linalg.cho_solve(cf, v, check_finite=False)
            except linalg.LinAlgError:
                sign, ld = np.linalg.slogdet(mat)
                if sign <= 0:
                    raise NumericError("Fredholm determinant is not positive; kernel/weight out of range")
                solve = lambda v: np.linalg.solve(mat, v)
            logdet += self.mult[m] * ld
            if self.anchor_modes is not None:
                beta = self.anchor_modes[m, k:stop] * dk
                quad += self.mult[m] * float(beta @ solve(beta))
        if self.anchor_modes is not None:
            logdet += math.log1p(quad / (self.n_theta * lam))
        return logdet

    def weights_at_nodes(self, weight: RadialWeight) -> np.ndarray:
        return weight(self.rho)


def _spectral_cutoff(model: KernelModel) -> float:
    phi0 = float(model.spectral_radial(0.0))
    k = 1.0 / model.alpha
    while float(model.spectral_radial(k)) > 1e-17 * phi0:
        k *= 1.5
    return k


def szego_profile(model: KernelModel, w: np.ndarray) -> np.ndarray:
    """``int log(1 - w phi(xi)) dxi`` for each entry of ``w`` (per unit area)."""
    kmax = _spectral_cutoff(model)
    k, gw = gl_panels(np.linspace(0.0, kmax, 41), 16)
    phi = model.spectral_radial(k)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return np.log1p(-np.outer(w, phi)) @ (2.0 * math.pi * k * gw)


def far_field_log(model: KernelModel, weight: RadialWeight, start: float, tol: float = 1e-9) -> float:
    """Local approximation of the log-determinant contribution beyond ``start``."""
    if start >= weight.hi:
        return 0.0
    stop = weight.truncation_radius(model.lam, tol) if not weight.bounded else weight.hi
    total = 0.0
    if stop > start:
        n = max(4, int(math.ceil(math.log(stop / start) / math.log(1.25))))
        pieces = [start] + [b for b in weight.breaks if start < b < stop] + [stop]
        edges = []
        for a, b in zip(pieces[:-1], pieces[1:]):
            edges.extend(np.geomspace(a, b, n + 1)[:-1])
        edges.append(stop)
        r, gw = gl_panels(edges, 8)
        total += float(np.sum(2.0 * math.pi * r * gw * szego_profile(model, weight(r))))
    if not weight.bounded:
        total -= model.lam * weight.tail_mass(max(stop, start))
    return total


def near_radius(model: KernelModel, weight: RadialWeight, anchor_radius: Optional[float] = None,
                far_w: float = 0.05, pad: float = 6.0, cap: float = 40.0) -> float:
    """Radius beyond which ``w <= far_w`` and the far-field rule is used."""
    core = max([weight.lo] + [b for b in weight.breaks if math.isfinite(b)] + [anchor_radius or 0.0])
    if weight.bounded and weight.hi <= core + pad * model.alpha:
        return weight.hi
    r = core + pad * model.alpha
    limit = core + cap * model.alpha
    if weight.bounded:
        limit = min(limit, weight.hi)
    probe = np.linspace(r, max(limit, r), 400)
    vals = weight(probe)
    # smallest probe radius after which the weight stays below far_w
    above = np.nonzero(vals > far_w)[0]
    if above.size == 0:
        return min(r, weight.hi)
    idx = above[-1] + 1
    return float(probe[min(idx, probe.size - 1)])


def fredholm_pgfl(
    kernel: Union[KernelModel, PalmKernel],
    weight: RadialWeight,
    *,
    far_w: float = 0.05,
    panel_width: Optional[float] = None,
    nodes_per_panel: int = 10,
    n_theta: Optional[int] = None,
) -> FredholmResult:
    """``E prod (1 - w(x))`` for a DPP or its reduced-Palm version."""
    if isinstance(kernel, PalmKernel):
        model = kernel.base
        anchor_radius = float(math.hypot(*kernel.anchor))
    else:
        model = kernel
        anchor_radius = None
    if model.is_poisson:
        from .series import weight_mass

        c = model.lam * (weight_mass(weight, weight.hi) if weight.bounded else
                         weight_mass(weight, weight.truncation_radius(model.lam, 1e-12)))
        return FredholmResult(math.exp(-c), -c, weight.hi, 0.0, 0, 0)
    r_near = near_radius(model, weight, anchor_radius, far_w)
    edges = weight.edges(upto=r_near)
    if edges[-1] <= edges[0]:
        return FredholmResult(1.0, 0.0, r_near, 0.0, 0, 0)
    op = FredholmOperator(model, edges, anchor_radius, panel_width=panel_width,
                          nodes_per_panel=nodes_per_panel, n_theta=n_theta)
    near = op.log_pgfl(weight(op.rho))
    far = far_field_log(model, weight, r_near)
    total = near + far
    return FredholmResult(math.exp(total), total, r_near, far, op.rho.size, op.n_theta)
