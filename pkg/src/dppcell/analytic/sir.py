"""SIR distribution of the typical user (nearest association, Rayleigh fading)."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..curves import CurveTable, clean_probability_curve
from ..kernels import KernelModel, palm_kernel, repulsiveness_mu
from ..numerics.fredholm import FredholmOperator, far_field_log, near_radius
from ..numerics.radial import gl_panels
from ..numerics.series import SeriesJob, SeriesNonConvergence, eval_determinantal_series
from ..parallel import map_ordered
from .interference import (
    ConditioningError,
    InterferenceQuery,
    angular_kernel_square,
    laplace_interference,
    laplace_weight,
)
from .pathloss import PathLossKind, PathLossModel
from .spatial import curve_meta

__all__ = [
    "db_to_linear",
    "parse_grid",
    "sir_ccdf_conditional",
    "sir_ccdf",
    "sir_ccdf_diag_approx",
    "ppp_coverage",
    "outer_radius",
]

OUTER_VOID = 1e-6
# per-(r0, T) contributions below this (by the diagonal upper bound) are skipped
SKIP_BELOW = 1e-10
SIR_FAR_W = 0.1


def db_to_linear(t_db) -> np.ndarray:
    return np.power(10.0, np.asarray(t_db, dtype=float) / 10.0)


def parse_grid(text: str) -> np.ndarray:
    """Parse ``start:step:stop`` (inclusive) or a comma separated list."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = parts
        if step <= 0 or stop < start:
            raise ValueError(f"invalid grid {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)
    return np.array([float(p) for p in text.split(",") if p.strip()])


def ppp_coverage(t_lin, beta: float = 4.0) -> np.ndarray:
    """Coverage of a Poisson network with nearest association and Rayleigh fading.

    ``1 / (1 + rho(T))`` with ``rho(T) = T^{2/beta} int_{T^{-2/beta}}^inf du / (1 + u^{beta/2})``;
    for ``beta = 4`` this is ``sqrt(T) (pi/2 - atan(1/sqrt(T)))``.
    """
    from scipy import integrate

    t = np.atleast_1d(np.asarray(t_lin, dtype=float))
    out = np.empty_like(t)
    for i, x in enumerate(t):
        if beta == 4.0:
            rho = math.sqrt(x) * (math.pi / 2 - math.atan(1 / math.sqrt(x)))
        else:
            lo = x ** (-2.0 / beta)
            val, _ = integrate.quad(lambda u: 1.0 / (1.0 + u ** (beta / 2.0)), lo, np.inf)
            rho = x ** (2.0 / beta) * val
        out[i] = 1.0 / (1.0 + rho)
    return out


def _require_pure(pathloss: PathLossModel) -> None:
    if pathloss.kind is not PathLossKind.PURE:
        raise ValueError("the SIR analysis uses pure power-law path loss")


def sir_ccdf_conditional(query: InterferenceQuery, t_lin: float, **kwargs) -> float:
    """``P(SIR > T)`` given the nearest base station at distance ``r0``.

    Equal to the Laplace transform of the interference at
    ``s = T / (P l(r0))``, i.e. the per-point weight ``1/(1 + T l(x)/l(x0))``.
    """
    _require_pure(query.pathloss)
    if not t_lin > 0:
        raise ValueError("threshold must be positive")
    s = t_lin / (query.power * float(query.pathloss(query.r0)))
    return laplace_interference(query, s, **kwargs)


def outer_radius(model: KernelModel, tol: float = OUTER_VOID) -> float:
    """Radius beyond which the reduced-Palm void probability is below ``tol``.

    Uses ``P(no point in B(0, r)) <= exp(-lam pi r^2 + mu)``, valid for any
    DPP and its reduced-Palm version.
    """
    mu = repulsiveness_mu(model).mu
    return math.sqrt((math.log(1.0 / tol) + mu) / (model.lam * math.pi))


def _outer_nodes(model: KernelModel, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return gl_panels([0.0, outer_radius(model)], nodes)


def _finish(metric, model, t_db, raw, extra) -> CurveTable:
    vals, reliable, dev = clean_probability_curve(raw, "decreasing")
    meta = curve_meta(metric, model, abscissa_unit="dB", max_raw_deviation=dev, **extra)
    return CurveTable(np.asarray(t_db, dtype=float), vals, raw, reliable, meta)


def _grid(t_db):
    t_db = np.asarray(t_db, dtype=float)
    if t_db.ndim != 1 or t_db.size == 0 or np.any(np.diff(t_db) <= 0):
        raise ValueError("threshold grid must be strictly increasing")
    return t_db, db_to_linear(t_db)


def _poisson_inner(model, r0, t_lin, pathloss) -> np.ndarray:
    out = np.empty(t_lin.size)
    for j, t in enumerate(t_lin):
        outer = laplace_weight(r0, t / float(pathloss(r0)), 1.0, pathloss, inside=0.0)
        out[j] = math.exp(-model.lam * (math.pi * r0 * r0 + outer.tail_mass(r0)))
    return out


def _fredholm_inner(model, r0, t_lin, pathloss, far_w=SIR_FAR_W) -> np.ndarray:
    """Palm generating functional at one ``r0`` for each threshold (NaN = skipped)."""
    out = np.full(t_lin.size, math.nan)
    todo = np.nonzero(np.isfinite(t_lin))[0]
    if todo.size == 0:
        return out
    weights = {j: laplace_weight(r0, t_lin[j] / float(pathloss(r0)), 1.0, pathloss) for j in todo}
    radii = {j: near_radius(model, weights[j], r0, far_w, pad=4.0) for j in todo}
    widest = max(todo, key=lambda j: radii[j])
    op = FredholmOperator(model, weights[widest].edges(upto=radii[widest]), r0)
    edges = op.panel_edges
    for j in todo:
        # snap the near radius up to a panel edge of the shared operator
        cut = float(edges[min(np.searchsorted(edges, radii[j] - 1e-12), edges.size - 1)])
        w = weights[j]
        out[j] = math.exp(op.log_pgfl(w(op.rho), upto=cut + 1e-12) + far_field_log(model, w, cut))
    return out


def _series_inner(model, r0, t_lin, pathloss, qmc_points, tail_tol, n_max):
    palm = palm_kernel(model, (r0, 0.0))
    out = np.empty(t_lin.size)
    ok = np.ones(t_lin.size, dtype=bool)
    for j, t in enumerate(t_lin):
        w = laplace_weight(r0, t / float(pathloss(r0)), 1.0, pathloss)
        try:
            out[j] = eval_determinantal_series(SeriesJob(palm, w, n_max=n_max, qmc_points=qmc_points,
                                                         tail_tol=tail_tol)).value
        except SeriesNonConvergence:
            out[j] = math.nan
            ok[j] = False
    return out, ok


def sir_ccdf(
    model: KernelModel,
    pathloss: PathLossModel,
    t_grid_db,
    *,
    method: str = "fredholm",
    nodes: int = 32,
    qmc_points: int = 2**13,
    tail_tol: float = 1e-3,
    n_max: int = 20,
    threads: Optional[int] = 1,
) -> CurveTable:
    """Coverage probability ``P(SIR > T)`` of the typical user.

    The outer integral over the nearest-BS distance ``r0`` uses
    Gauss-Legendre nodes on ``[0, R*]`` where the reduced-Palm void
    probability bound falls below 1e-6. At each node the generating
    functional of the reduced-Palm process with weight ``1 - 1_{|x|>=r0}/(1 + T
    (r0/|x|)^beta)`` is evaluated either by resumming the determinantal series
    as a Fredholm determinant (``"fredholm"``) or by the truncated QMC series
    (``"series"``); series failures are interpolated over in ``r0`` and
    flagged in the metadata.
    """
    _require_pure(pathloss)
    t_db, t_lin = _grid(t_db=t_grid_db)
    r, w = _outer_nodes(model, nodes)
    lam = model.lam
    failed = []
    if model.is_poisson:
        inner = np.array([_poisson_inner(model, x, t_lin, pathloss) for x in r])
        used = "closed_form"
    elif method == "fredholm":
        # the diagonal approximation bounds the exact integrand from above,
        # so (r0, T) pairs it already makes negligible are skipped
        upper = _diag_inner(model, r, t_lin, pathloss)
        weight_r = 2 * math.pi * lam * r * w
        plan = np.where(weight_r[:, None] * upper > SKIP_BELOW, t_lin[None, :], math.nan)
        inner = np.array(map_ordered(lambda i: _fredholm_inner(model, r[i], plan[i], pathloss),
                                     range(r.size), threads))
        inner = np.where(np.isfinite(inner), inner, 0.0)
        used = "fredholm"
    elif method == "series":
        rows = map_ordered(lambda x: _series_inner(model, x, t_lin, pathloss, qmc_points, tail_tol, n_max),
                           r, threads)
        inner = np.array([v for v, _ in rows])
        ok = np.array([k for _, k in rows])
        for j in range(t_lin.size):
            bad = ~ok[:, j]
            if np.any(bad):
                failed.append({"T_db": float(t_db[j]), "r0": r[bad].tolist()})
                if np.any(~bad):
                    inner[bad, j] = np.interp(r[bad], r[~bad], inner[~bad, j])
                else:
                    inner[:, j] = math.nan
        used = "series"
    else:
        raise ValueError(f"unknown method {method!r}")
    raw = (2 * math.pi * lam * r * w) @ inner
    curve = _finish("sir_ccdf", model, t_db, raw,
                    {"method": used, "outer_nodes": nodes, "outer_radius": float(r[-1] if r.size else 0),
                     "beta": pathloss.beta, "qmc_points": int(qmc_points), "tail_tol": tail_tol,
                     "interpolated": failed})
    if failed:
        bad_t = {f["T_db"] for f in failed}
        curve.reliable &= ~np.isin(t_db, list(bad_t))
    return curve


def _diag_inner(model, r, t_lin, pathloss, closed_form=None) -> np.ndarray:
    """``exp(-int K!(x, x) w(x) dx)`` for each outer node and threshold."""
    lam = model.lam
    inner = np.empty((r.size, t_lin.size))
    for i, r0 in enumerate(r):
        for j, t in enumerate(t_lin):
            outer = laplace_weight(r0, t / float(pathloss(r0)), 1.0, pathloss, inside=0.0)
            inner[i, j] = lam * (math.pi * r0 * r0 + outer.tail_mass(r0))
        if not model.is_poisson:
            # subtract (1/lam) int K0(|x - x0|)^2 w(x) dx on a radial grid
            hi = r0 + 12.0 * model.alpha
            edges = sorted(set(np.arange(0.0, hi, 0.25 * model.alpha).tolist() + [r0, hi]))
            rr, ww = gl_panels(edges, 16)
            ang = angular_kernel_square(model, rr, r0, closed_form) / lam
            for j, t in enumerate(t_lin):
                a = t * (r0 / rr) ** pathloss.beta
                wt = np.where(rr < r0, 1.0, a / (1.0 + a))
                inner[i, j] -= float(np.sum(ww * rr * ang * wt))
    return np.exp(-inner)


def sir_ccdf_diag_approx(
    model: KernelModel,
    pathloss: PathLossModel,
    t_grid_db,
    *,
    nodes: int = 32,
    closed_form: Optional[bool] = None,
) -> CurveTable:
    """Coverage under the diagonal approximation of the Palm generating functional.

    Every Gram determinant is replaced by the product of its diagonal, so the
    inner series collapses to ``exp(-int K!(x, x) w(x) dx)``. For the Gauss
    family the angular integral of ``K0^2`` uses the Bessel-I0 closed form
    (exponentially scaled, so no overflow).
    """
    _require_pure(pathloss)
    t_db, t_lin = _grid(t_grid_db)
    r, w = _outer_nodes(model, nodes)
    lam = model.lam
    upper = _diag_inner(model, r, t_lin, pathloss, closed_form)
    raw = (2 * math.pi * lam * r * w) @ upper
    return _finish("sir_ccdf_diag_approx", model, t_db, raw,
                   {"method": "diagonal", "outer_nodes": nodes, "beta": pathloss.beta})
