"""Monte Carlo SIR coverage for a user at the window centre."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..analytic.pathloss import PathLossModel
from ..curves import CurveTable
from .patterns import PointPattern
from .samplers import SimConfig, replication_rng, sample_pattern
from .statistics import Envelope

__all__ = ["CoverageRun", "link_sir", "run_coverage"]

log = logging.getLogger(__name__)

MAX_RESAMPLE = 100


def link_sir(pattern: PointPattern, pathloss: PathLossModel, rng: np.random.Generator,
             n_fades: int = 1, user: Optional[np.ndarray] = None) -> np.ndarray:
    """SIR samples for a user attached to its nearest point under Rayleigh fading.

    Returns ``n_fades`` values; a pattern with a single point yields ``inf``.
    """
    u = pattern.window.center if user is None else np.asarray(user, float)
    d = np.hypot(*(pattern.points - u).T)
    if d.size == 0:
        raise ValueError("empty pattern has no serving point")
    k = int(np.argmin(d))
    gain = pathloss(d)
    fades = rng.exponential(1.0, size=(n_fades, d.size))
    sig = fades[:, k] * gain[k]
    interf = fades @ gain - sig
    with np.errstate(divide="ignore"):
        return np.where(interf > 0, sig / np.where(interf > 0, interf, 1.0), np.inf)


@dataclass
class CoverageRun:
    """Coverage CCDF samples: one row per replication, one column per threshold."""

    thresholds_db: np.ndarray
    per_replication: np.ndarray
    resampled: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, med, hi = self.quantiles()
        if np.any(lo > med) or np.any(med > hi):
            raise ValueError("envelope quantiles out of order")

    @property
    def mean(self) -> np.ndarray:
        return self.per_replication.mean(axis=0)

    def quantiles(self, qs=(0.025, 0.5, 0.975)) -> np.ndarray:
        return np.quantile(self.per_replication, qs, axis=0)

    def envelope(self, level: float = 0.95) -> Envelope:
        return Envelope.from_curves(self.thresholds_db, self.per_replication, "quantile", level)

    def curve(self) -> CurveTable:
        m = self.mean
        return CurveTable(self.thresholds_db, m, m, np.ones(m.size, bool), dict(self.meta))

    def to_csv(self, path) -> None:
        lo, med, hi = self.quantiles()
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold_db", "mean", "q025", "median", "q975"])
            for row in zip(self.thresholds_db, self.mean, lo, med, hi):
                w.writerow([repr(float(v)) for v in row])


def run_coverage(config: SimConfig, pathloss: PathLossModel, thresholds_db: Sequence[float],
                      n_fades: int = 64, patterns: Optional[Sequence[PointPattern]] = None,
                      sampler: Callable = sample_pattern, threads: Optional[int] = 1) -> CoverageRun:
    """Empirical P(SIR > T) for the user at the window centre.

    Each replication draws one pattern and ``n_fades`` independent fading
    vectors; the replication's coverage is the fraction of fades above each
    threshold.  Empty patterns are redrawn and counted in ``resampled``.
    Precomputed ``patterns`` may be supplied to share realisations.
    """
    t_db = np.asarray(thresholds_db, dtype=float)
    t_lin = 10.0 ** (t_db / 10.0)
    if patterns is None:
        from ..parallel import map_ordered

        patterns = map_ordered(lambda i: sampler(config, i), range(config.replications), threads)
    reps = len(patterns)
    out = np.empty((reps, t_db.size))
    resampled = 0
    for i in range(reps):
        pat = patterns[i]
        tries = 0
        while len(pat) == 0:
            tries += 1
            if tries > MAX_RESAMPLE:
                raise RuntimeError("too many empty patterns; enlarge the window")
            pat = sampler(config, config.replications + MAX_RESAMPLE * i + tries)
        resampled += tries
        rng = replication_rng(config.rng_seed + 7919, i)
        sir = np.sort(link_sir(pat, pathloss, rng, n_fades))
        out[i] = 1.0 - np.searchsorted(sir, t_lin, side="right") / n_fades
    if resampled:
        log.info("redrew %d empty patterns", resampled)
    meta = {"metric": "coverage_sim", "replications": reps, "n_fades": n_fades, "beta": pathloss.beta}
    return CoverageRun(t_db, out, resampled, meta)
