"""Truncated alternating determinantal series evaluated by QMC.

For a kernel ``K`` (stationary model or reduced-Palm kernel) and a radial
weight ``w`` with values in [0, 1] the evaluator computes

    sum_{n=0}^{N} (-1)^n / n! int det[K(x_i, x_j)] prod w(x_i) dx_1 .. dx_n

which is the probability generating functional ``E prod (1 - w(x))``. An
optional ``lead`` weight adds one extra integration point carrying that
weight to every order (used for mean interference given a void).

Each order is an expectation over ``n`` points drawn from a radial
importance density ``q``; the per-point factor ``lam * w / q`` and the
normalised determinant ``det / lam^n`` (in [0, 1] by Hadamard's inequality)
keep every sample bounded. The truncation order ``N`` is the smallest with
``sum_{m>N} C^m / m! <= tail_tol`` where ``C = lam * int w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..kernels import KernelModel, PalmKernel
from .linalg import psd_det
from .radial import RadialProposal, RadialWeight, radial_integral
from .sobol import sobol_block

__all__ = [
    "SeriesJob",
    "SeriesResult",
    "SeriesNonConvergence",
    "eval_determinantal_series",
    "hadamard_tail",
    "weight_mass",
]

CHUNK = 4096


class SeriesNonConvergence(RuntimeError):
    """The Hadamard tail bound was not reached within ``n_max`` orders."""

    def __init__(self, message: str, partial: "SeriesResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SeriesJob:
    """A determinantal-series evaluation request.

    ``qmc_points`` must be a power of two. ``mapping`` selects the unit-cube
    map: ``"weighted"`` (radial importance sampling, default) or
    ``"square"`` (linear map onto ``(rho, theta)``, bounded supports only).
    ``proposal`` replaces ``weight`` as the shape of the sampling density,
    which lets a family of weights share one set of sample points.
    """

    kernel: Union[KernelModel, PalmKernel]
    weight: RadialWeight
    n_max: int = 20
    qmc_points: int = 2**13
    tail_tol: float = 1e-3
    lead: Optional[RadialWeight] = None
    proposal: Optional[RadialWeight] = None
    mapping: str = "weighted"

    def __post_init__(self):
        q = int(self.qmc_points)
        if q < 1 or q & (q - 1):
            raise ValueError(f"qmc_points must be a power of two, got {self.qmc_points}")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


@dataclass
class SeriesResult:
    value: float
    orders_used: int
    tail_bound: float
    per_order_terms: list
    mass: float = 0.0
    lead_mass: Optional[float] = None
    cut_radius: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "orders_used": self.orders_used,
            "tail_bound": self.tail_bound,
            "per_order_terms": list(self.per_order_terms),
            "mass": self.mass,
            "lead_mass": self.lead_mass,
            "cut_radius": self.cut_radius,
            **self.meta,
        }


def hadamard_tail(c: float, n: int) -> float:
    """``sum_{m > n} c^m / m!`` computed without cancellation."""
    if c <= 0:
        return 0.0
    term = c ** (n + 1) / math.factorial(n + 1) if n < 170 else 0.0
    total = 0.0
    m = n + 1
    while term > 1e-300:
        total += term
        m += 1
        term *= c / m
        if term < 1e-18 * total:
            break
    return total


def weight_mass(weight: RadialWeight, radius: float) -> float:
    """Planar integral of ``weight`` over ``|x| < radius``."""
    hi = min(weight.hi, radius)
    if hi <= weight.lo:
        return 0.0
    edges = weight.edges(upto=hi)
    span = hi - weight.lo
    return radial_integral(weight, edges, 32, max_panel=max(span / 64.0, 1e-12))


def _pairwise_sum(x: np.ndarray) -> float:
    # fixed-shape reduction so results do not depend on chunking
    return float(np.sum(x))


def _order_count(c: float, tol: float, n_max: int) -> Optional[int]:
    for n in range(n_max + 1):
        if hadamard_tail(c, n) <= tol:
            return n
    return None


def _diag(kernel, pts: np.ndarray) -> np.ndarray:
    return kernel.diag(pts)


def eval_determinantal_series(job: SeriesJob) -> SeriesResult:
    """Evaluate the truncated determinantal series described by ``job``."""
    kernel = job.kernel
    lam = kernel.lam
    weight = job.weight
    lead = job.lead

    cut = weight.truncation_radius(lam, job.tail_tol / 10.0) if not weight.bounded else weight.hi
    c = lam * weight_mass(weight, cut) if cut > weight.lo else 0.0
    excluded = lam * weight.tail_mass(cut) if not weight.bounded else 0.0

    lead_cut = None
    c_lead = None
    if lead is not None:
        lead_cut = lead.truncation_radius(lam, job.tail_tol / 10.0) if not lead.bounded else lead.hi
        c_lead = lam * weight_mass(lead, lead_cut)
    scale = 1.0 if c_lead is None else c_lead

    meta = {"mapping": job.mapping, "qmc_points": int(job.qmc_points), "tail_tol": job.tail_tol}

    n_needed = _order_count(c, job.tail_tol / scale, job.n_max)
    n_use = job.n_max if n_needed is None else n_needed
    tail = scale * hadamard_tail(c, n_use) + excluded * scale

    if kernel.is_poisson:
        # det == lam^n: the order-n term is (-C)^n / n! exactly
        terms = [scale * (-c) ** n / math.factorial(n) for n in range(n_use + 1)]
        value = scale * math.exp(-c)
        meta["closed_form"] = True
        # the value is exact, so only the truncated support can leave a tail
        tail = excluded * scale
        n_needed = n_use
        result = SeriesResult(value, n_use, tail, terms, c, c_lead, cut, meta)
    else:
        terms = []
        ratios = []
        for n in range(n_use + 1):
            est, max_ratio = _estimate_order(job, n, cut, lead_cut)
            bound = scale * c**n / math.factorial(n) * max_ratio
            if abs(est) > bound * (1 + 1e-9) + 1e-300:
                raise AssertionError(f"order {n} term {est:.3e} exceeds its Hadamard bound {bound:.3e}")
            terms.append(est)
            ratios.append(max_ratio)
        value = float(math.fsum(terms))
        meta["max_factor_ratio"] = float(max(ratios))
        result = SeriesResult(value, n_use, tail, terms, c, c_lead, cut, meta)

    if n_needed is None:
        raise SeriesNonConvergence(
            f"Hadamard tail {tail:.3e} > tail_tol {job.tail_tol:g} at n_max={job.n_max} (C={c:.3g})", result
        )
    return result


def _estimate_order(job: SeriesJob, n: int, cut: float, lead_cut: Optional[float]) -> tuple[float, float]:
    """QMC estimate of the signed order-``n`` term and the max factor ratio.

    The ratio is ``max prod(lam w / q) / C^n`` over the samples, so that
    ``|term| <= C^n / n! * ratio`` is Hadamard's bound for the estimator.
    """
    kernel = job.kernel
    lam = kernel.lam
    lead = job.lead
    k_lead = 1 if lead is not None else 0
    n_pts = n + k_lead
    if n_pts == 0:
        return 1.0, 1.0
    dim = 2 * (job.n_max + 1)
    u = sobol_block(dim, int(job.qmc_points))
    prop_w = job.proposal if job.proposal is not None else job.weight
    main = RadialProposal(prop_w, cut, job.mapping) if n > 0 else None
    lead_prop = RadialProposal(lead, lead_cut, job.mapping) if lead is not None else None

    c = lam * weight_mass(job.weight, cut)
    c_lead = lam * weight_mass(lead, lead_cut) if lead is not None else 1.0
    norm = c**n * c_lead

    total = 0.0
    max_ratio = 0.0
    m = u.shape[0]
    for lo in range(0, m, CHUNK):
        block = u[lo : lo + CHUNK]
        pts = np.empty((block.shape[0], n_pts, 2))
        factor = np.ones(block.shape[0])
        col = 0
        if lead is not None:
            p, q = lead_prop.sample(block[:, 0], block[:, 1])
            rho = np.hypot(p[:, 0], p[:, 1])
            pts[:, 0] = p
            factor *= lam * lead(rho) / q
            col = 2
        for i in range(n):
            p, q = main.sample(block[:, col + 2 * i], block[:, col + 2 * i + 1])
            rho = np.hypot(p[:, 0], p[:, 1])
            pts[:, k_lead + i] = p
            factor *= lam * job.weight(rho) / q
        if kernel.is_poisson:
            det = np.ones(block.shape[0])
        else:
            det = psd_det(kernel.gram(pts) / lam)
            det = np.atleast_1d(det)
        total += _pairwise_sum(factor * det)
        max_ratio = max(max_ratio, float(np.max(factor)) / norm if norm > 0 else 0.0)
    est = (-1) ** n * total / m / math.factorial(n)
    return est, max_ratio
