"""Empty space, its density, and nearest-neighbour distance functions."""

from __future__ import annotations

import datetime as _dt
import math
from typing import Optional, Union

import numpy as np

from ..curves import CurveNonConvergence, CurveTable, clean_probability_curve
from ..kernels import KernelModel, PalmKernel, palm_kernel
from ..numerics.fredholm import fredholm_pgfl
from ..numerics.radial import RadialWeight
from ..numerics.series import SeriesJob, SeriesNonConvergence, eval_determinantal_series
from ..parallel import map_ordered

__all__ = ["void_probability", "empty_space_fn", "esf_density", "nearest_neighbor_fn", "curve_meta"]

METHODS = ("series", "fredholm")


def curve_meta(metric: str, model: KernelModel, **extra) -> dict:
    meta = {
        "metric": metric,
        "model": model.params(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra)
    return meta


def void_probability(
    kernel: Union[KernelModel, PalmKernel],
    radius: float,
    *,
    method: str = "series",
    qmc_points: int = 2**13,
    tail_tol: float = 1e-3,
    n_max: int = 20,
    mapping: str = "weighted",
) -> tuple[float, bool, dict]:
    """Probability of no point in the disk ``B(0, radius)``.

    Returns ``(value, converged, diagnostics)``; a non-converged series
    returns its partial sum.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if radius <= 0:
        return 1.0, True, {"orders_used": 0}
    weight = RadialWeight.disk(radius)
    if method == "fredholm":
        res = fredholm_pgfl(kernel, weight)
        return res.value, True, {"method": "fredholm", "n_radial": res.n_radial}
    job = SeriesJob(kernel, weight, n_max=n_max, qmc_points=qmc_points, tail_tol=tail_tol, mapping=mapping)
    try:
        res = eval_determinantal_series(job)
        ok = True
    except SeriesNonConvergence as exc:
        res = exc.partial
        ok = False
    return res.value, ok, {"method": "series", "orders_used": res.orders_used, "tail_bound": res.tail_bound}


def _void_curve(metric, kernel_at, model, r_grid, method, qmc_points, tail_tol, n_max, mapping, threads):
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size == 0 or np.any(r < 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be non-negative and strictly increasing")

    def task(radius):
        return void_probability(kernel_at(radius), radius, method=method, qmc_points=qmc_points,
                                tail_tol=tail_tol, n_max=n_max, mapping=mapping)

    out = map_ordered(task, r, threads)
    raw = np.array([1.0 - v for v, _, _ in out])
    converged = np.array([ok for _, ok, _ in out])
    vals, reliable, dev = clean_probability_curve(raw, "increasing")
    reliable &= converged
    meta = curve_meta(metric, model, method=method, qmc_points=int(qmc_points), tail_tol=tail_tol,
                      n_max=n_max, mapping=mapping, max_raw_deviation=dev,
                      monotone_violation=bool(dev > 0.01),
                      orders_used=[d.get("orders_used") for _, _, d in out],
                      non_converged=[float(x) for x in r[~converged]])
    curve = CurveTable(r, vals, raw, reliable, meta)
    if not np.all(converged):
        raise CurveNonConvergence(f"{metric}: series did not converge at r = {r[~converged].tolist()}", curve)
    return curve


def empty_space_fn(model: KernelModel, r_grid, *, method: str = "series", qmc_points: int = 2**13,
                   tail_tol: float = 1e-3, n_max: int = 20, mapping: str = "weighted",
                   threads: Optional[int] = 1) -> CurveTable:
    """Empty space function ``F(r) = 1 - P(no point in B(0, r))``."""
    return _void_curve("empty_space", lambda r: model, model, r_grid, method, qmc_points, tail_tol,
                       n_max, mapping, threads)


def nearest_neighbor_fn(model: KernelModel, r_grid, *, method: str = "series", qmc_points: int = 2**13,
                        tail_tol: float = 1e-3, n_max: int = 20, mapping: str = "weighted",
                        threads: Optional[int] = 1) -> CurveTable:
    """Nearest-neighbour distance CDF, using the reduced-Palm kernel at the origin."""
    palm = palm_kernel(model, (0.0, 0.0))
    return _void_curve("nearest_neighbor", lambda r: palm, model, r_grid, method, qmc_points, tail_tol,
                       n_max, mapping, threads)


def esf_density(model: KernelModel, r: float, *, method: str = "series", qmc_points: int = 2**13,
                tail_tol: float = 1e-3, n_max: int = 20, mapping: str = "weighted") -> float:
    """Density of the empty-space distance at ``r > 0`` (1/km).

    Equals ``2 pi lam r`` times the void probability of ``B(0, r)`` under the
    reduced-Palm kernel anchored at ``(r, 0)``, i.e. the series of
    ``(n+1)``-point determinants with the anchor row fixed.
    """
    if not r > 0:
        raise ValueError("esf_density requires r > 0")
    palm = palm_kernel(model, (r, 0.0))
    value, ok, _ = void_probability(palm, r, method=method, qmc_points=qmc_points, tail_tol=tail_tol,
                                    n_max=n_max, mapping=mapping)
    if not ok:
        raise SeriesNonConvergence(f"esf_density did not converge at r={r}", None)
    return 2.0 * math.pi * model.lam * r * value
