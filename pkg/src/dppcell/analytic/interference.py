"""Mean interference and the Laplace transform of the interference.

The typical user sits at the origin. With fixed association the serving
base station is a Palm point at ``x0 = (r0, 0)``; with nearest association
it is additionally the closest point, so every functional is a ratio of
reduced-Palm series with the void ``B(0, r0)`` in the denominator.
Rayleigh fading is integrated out analytically, giving the per-point factor
``1 / (1 + s P l(x))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..kernels import Family, KernelModel, palm_kernel
from ..numerics.fredholm import fredholm_pgfl
from ..numerics.radial import RadialWeight, gl_panels
from ..numerics.series import SeriesJob, SeriesNonConvergence, eval_determinantal_series
from ..numerics.special import bessel_i0e
from .pathloss import DivergentInterference, PathLossKind, PathLossModel

__all__ = [
    "Association",
    "InterferenceQuery",
    "ConditioningError",
    "laplace_weight",
    "angular_kernel_square",
    "palm_deficit",
    "mean_interference_fixed",
    "mean_interference_nearest",
    "laplace_interference",
    "tail_spot_check",
]

DENOMINATOR_FLOOR = 1e-12


class ConditioningError(ArithmeticError):
    """The conditioning event (no point in ``B(0, r0)``) is numerically negligible."""


class Association(str, enum.Enum):
    FIXED = "fixed"
    NEAREST = "nearest"


@dataclass(frozen=True)
class InterferenceQuery:
    """Typical-user interference setup.

    ``power`` is the transmit power multiplier, ``r0`` the distance to the
    tagged base station in km. Fading marks are exponential with unit mean.
    """

    model: KernelModel
    pathloss: PathLossModel
    power: float = 1.0
    r0: float = 0.0
    association: Association = Association.NEAREST

    def __post_init__(self):
        object.__setattr__(self, "association", Association(self.association))
        if not self.r0 >= 0:
            raise ValueError("r0 must be >= 0")
        if not self.power > 0:
            raise ValueError("power must be positive")


def _power_weight(pathloss: PathLossModel, coef: float):
    # a / (1 + a) with a = coef * l(r); stable for small and large a
    def f(r):
        a = coef * pathloss(r)
        return a / (1.0 + a)

    return f


def laplace_weight(r0: float, s: float, power: float, pathloss: PathLossModel, inside: float = 1.0) -> RadialWeight:
    """``w(x) = 1`` inside ``B(0, r0)`` and ``1 - 1/(1 + s P l(x))`` outside."""
    outer = _power_weight(pathloss, s * power)

    def f(r):
        return np.where(r < r0, inside, outer(r))

    breaks = tuple(b for b in (r0, 1.0 if pathloss.kind is PathLossKind.BOUNDED else None) if b)
    lo = 0.0 if inside > 0 else r0
    return RadialWeight(f, lo, math.inf, tuple(sorted(set(breaks))), None, f"laplace(r0={r0:g},s={s:g})")


def _lead_weight(r0: float, power: float, pathloss: PathLossModel) -> RadialWeight:
    breaks = (1.0,) if pathloss.kind is PathLossKind.BOUNDED and r0 < 1 else ()
    return RadialWeight(lambda r: power * pathloss(r), r0, math.inf, breaks, None, "P*l")


def tail_spot_check(lam: float, weight: RadialWeight, radii=(10.0, 100.0, 1000.0)) -> bool:
    """Heuristic check that ``lam * int_{|x|>R} w`` decreases to zero.

    Only finitely many radii can be inspected, so this is a spot check and
    not a proof of integrability.
    """
    vals = [lam * weight.tail_mass(r) for r in radii]
    return all(np.isfinite(vals)) and all(b <= a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-2


# ---- fixed association -------------------------------------------------


def _angular_nodes(rho_max: float, alpha: float) -> int:
    need = 24.0 * rho_max / alpha + 64.0
    return 1 << int(math.ceil(math.log2(need)))


def angular_kernel_square(model: KernelModel, rho, r0: float, closed_form: Optional[bool] = None) -> np.ndarray:
    """``int_0^{2 pi} K0(|x - x0|)^2 dtheta`` for ``x = rho e^{i theta}``, ``x0 = (r0, 0)``."""
    rho = np.asarray(rho, dtype=float)
    if model.is_poisson:
        return np.zeros_like(rho)
    use_closed = model.family is Family.GAUSS if closed_form is None else closed_form
    a2 = model.alpha**2
    if use_closed:
        if model.family is not Family.GAUSS:
            raise ValueError("closed form exists only for the Gauss family")
        z = 4.0 * rho * r0 / a2
        return 2 * math.pi * model.lam**2 * np.exp(-2.0 * (rho - r0) ** 2 / a2) * bessel_i0e(z)
    n = _angular_nodes(max(float(np.max(rho, initial=0.0)), r0), model.alpha)
    theta = 2 * math.pi * np.arange(n) / n
    out = np.empty_like(rho)
    for lo in range(0, rho.size, 256):
        r = rho.ravel()[lo : lo + 256, None]
        d = np.sqrt(np.maximum(r * r + r0 * r0 - 2 * r * r0 * np.cos(theta), 0.0))
        out.ravel()[lo : lo + 256] = np.sum(model.cov_radial(d) ** 2, axis=1) * (2 * math.pi / n)
    return out


def _deficit_edges(model: KernelModel, r0: float, extra=()) -> list:
    a = model.alpha
    near = r0 + (8.0 if model.family is Family.GAUSS else 12.0) * a
    edges = set(np.arange(0.0, near + 1e-12, 0.25 * a).tolist())
    edges.update(x for x in extra if 0 < x < near)
    edges.add(r0)
    edges.add(near)
    if model.family is not Family.GAUSS:
        # algebraic kernel tails: continue on geometric panels
        edges.update(np.geomspace(near, near + 200.0 * a, 40).tolist())
    return sorted(e for e in edges if e >= 0)


def palm_deficit(model: KernelModel, r0: float, pathloss: PathLossModel, power: float = 1.0,
                 closed_form: Optional[bool] = None) -> float:
    """``(P / lam) int K0(|x - x0|)^2 l(x) dx``: mean interference removed by repulsion."""
    if model.is_poisson:
        return 0.0
    if pathloss.kind is PathLossKind.PURE:
        raise DivergentInterference("pure power-law path loss diverges at the origin for a fixed serving BS")
    edges = _deficit_edges(model, r0, (1.0,))
    r, w = gl_panels(edges, 20)
    ang = angular_kernel_square(model, r, r0, closed_form)
    return power / model.lam * float(np.sum(w * r * pathloss(r) * ang))


def mean_interference_fixed(query: InterferenceQuery, method: str = "auto") -> float:
    """Mean interference with the serving base station fixed at distance ``r0``.

    ``method`` is ``"closed"`` (Gauss only, Bessel-I0 radial form),
    ``"quadrature"`` (direct integration of the reduced-Palm diagonal) or
    ``"auto"`` (closed form where available).
    """
    model, pl, P, r0 = query.model, query.pathloss, query.power, query.r0
    if pl.kind is PathLossKind.PURE:
        raise DivergentInterference("pure power-law path loss diverges at the origin for a fixed serving BS")
    total = P * model.lam * pl.outer_integral(0.0)
    if model.is_poisson:
        return total
    if method == "auto":
        method = "closed" if model.family is Family.GAUSS else "quadrature"
    if method == "closed":
        if model.family is not Family.GAUSS:
            raise ValueError("closed form exists only for the Gauss family")
        return total - _gauss_deficit_closed(model, r0, pl, P)
    if method == "quadrature":
        return _palm_diag_quadrature(model, r0, pl, P)
    raise ValueError(f"unknown method {method!r}")


def _gauss_deficit_closed(model: KernelModel, r0: float, pl: PathLossModel, P: float) -> float:
    # 2 P pi lam e^{-2 r0^2/a^2} (A1 + A2), with the exponentials folded into
    # exp(-2 (r - r0)^2 / a^2) * I0e(4 r r0 / a^2)
    a2 = model.alpha**2
    hi = max(1.0, r0 + 8.0 * model.alpha)
    e1 = np.linspace(0.0, 1.0, max(2, int(math.ceil(1.0 / (0.25 * model.alpha))) + 1))
    e2 = np.linspace(1.0, hi, max(2, int(math.ceil((hi - 1.0) / (0.25 * model.alpha))) + 1))
    r1, w1 = gl_panels(e1, 20)
    r2, w2 = gl_panels(e2, 20)

    def core(r):
        return np.exp(-2.0 * (r - r0) ** 2 / a2) * bessel_i0e(4.0 * r * r0 / a2) * r

    a1 = float(np.sum(w1 * core(r1)))
    a2_ = float(np.sum(w2 * core(r2) * r2 ** (-pl.beta)))
    return 2.0 * P * math.pi * model.lam * (a1 + a2_)


def _palm_diag_quadrature(model: KernelModel, r0: float, pl: PathLossModel, P: float) -> float:
    # P int K!(x, x) l(x) dx with K!(x, x) = lam - K0(|x - x0|)^2 / lam,
    # integrated on a polar grid (angular trapezoid, radial Gauss-Legendre)
    edges = _deficit_edges(model, r0, (1.0,))
    r, w = gl_panels(edges, 20)
    ang = angular_kernel_square(model, r, r0, closed_form=False)
    palm_diag = 2 * math.pi * model.lam - ang / model.lam
    near = float(np.sum(w * r * pl(r) * palm_diag))
    far = model.lam * pl.outer_integral(edges[-1]) if edges[-1] >= 1.0 else 0.0
    return P * (near + far)


# ---- nearest association ----------------------------------------------


def _palm_void(palm, r0, method, qmc_points, tail_tol, n_max):
    if method == "fredholm":
        return fredholm_pgfl(palm, RadialWeight.disk(r0)).value
    job = SeriesJob(palm, RadialWeight.disk(r0), n_max=n_max, qmc_points=qmc_points, tail_tol=tail_tol)
    return eval_determinantal_series(job).value


def _check_denominator(value: float, r0: float) -> None:
    if value < DENOMINATOR_FLOOR:
        raise ConditioningError(f"void probability {value:.3e} of B(0, {r0:g}) is below {DENOMINATOR_FLOOR:g}")


def laplace_interference(
    query: InterferenceQuery,
    s: float,
    *,
    method: str = "series",
    qmc_points: int = 2**13,
    tail_tol: float = 1e-3,
    n_max: int = 20,
    proposal_s: Optional[float] = None,
) -> float:
    """``E[exp(-s I)]`` for the typical user served by its nearest base station.

    ``proposal_s`` fixes the sampling density of the numerator series to the
    weight at that value of ``s``, so evaluations at different ``s`` share
    sample points (useful for finite differences).
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    model, pl, P, r0 = query.model, query.pathloss, query.power, query.r0
    if not r0 > 0:
        raise ValueError("nearest association needs r0 > 0 (r0 = 0 is excluded)")
    if s == 0:
        return 1.0
    num_w = laplace_weight(r0, s, P, pl)
    if model.is_poisson:
        outer = laplace_weight(r0, s, P, pl, inside=0.0)
        c = model.lam * outer.tail_mass(r0)
        return math.exp(-c)
    palm = palm_kernel(model, (r0, 0.0))
    if method == "fredholm":
        den = fredholm_pgfl(palm, RadialWeight.disk(r0)).value
        _check_denominator(den, r0)
        return fredholm_pgfl(palm, num_w).value / den
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    den = _palm_void(palm, r0, "series", qmc_points, tail_tol, n_max)
    _check_denominator(den, r0)
    proposal = laplace_weight(r0, proposal_s, P, pl) if proposal_s is not None else None
    job = SeriesJob(palm, num_w, n_max=n_max, qmc_points=qmc_points, tail_tol=tail_tol, proposal=proposal)
    return eval_determinantal_series(job).value / den


def mean_interference_nearest(
    query: InterferenceQuery,
    *,
    method: str = "series",
    qmc_points: int = 2**13,
    tail_tol: float = 1e-3,
    n_max: int = 20,
) -> float:
    """Mean interference given that the nearest base station is at ``r0``.

    The numerator is a Palm series whose first integration point ranges over
    ``|x| >= r0`` with weight ``P l(x)`` and whose remaining points range over
    ``B(0, r0)``; the denominator is the Palm void probability. With
    ``method="fredholm"`` the same quantity is obtained as ``-d/ds`` of the
    Laplace transform at zero by Richardson extrapolation of Fredholm
    determinants.
    """
    model, pl, P, r0 = query.model, query.pathloss, query.power, query.r0
    if not r0 > 0:
        raise ValueError("nearest association needs r0 > 0 (r0 = 0 is excluded)")
    if model.is_poisson:
        return P * model.lam * pl.outer_integral(r0)
    palm = palm_kernel(model, (r0, 0.0))
    if method == "fredholm":
        scale = P * model.lam * pl.outer_integral(r0)
        h = 1e-3 / scale
        den = fredholm_pgfl(palm, RadialWeight.disk(r0)).value
        _check_denominator(den, r0)
        n1 = fredholm_pgfl(palm, laplace_weight(r0, h, P, pl)).value
        n2 = fredholm_pgfl(palm, laplace_weight(r0, 2 * h, P, pl)).value
        return -(-3.0 * den + 4.0 * n1 - n2) / (2.0 * h) / den
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    den = _palm_void(palm, r0, "series", qmc_points, tail_tol, n_max)
    _check_denominator(den, r0)
    job = SeriesJob(palm, RadialWeight.disk(r0), n_max=n_max, qmc_points=qmc_points, tail_tol=tail_tol,
                    lead=_lead_weight(r0, P, pl))
    return eval_determinantal_series(job).value / den
