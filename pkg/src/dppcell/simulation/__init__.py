"""Point-process simulation and empirical statistics."""

from .coverage import CoverageRun, link_sir, run_coverage
from .patterns import PointPattern, Window
from .samplers import (
    HexGrid,
    SimConfig,
    SimConfigError,
    replication_rng,
    sample_dpp,
    sample_hex_perturbed,
    sample_many,
    sample_pattern,
    sample_ppp,
    spectral_modes,
)
from .statistics import (
    Envelope,
    EnvelopeResult,
    GridMismatchError,
    analytic_k,
    build_envelope,
    empirical_esf,
    empirical_nn,
    envelope_test,
    ripley_k,
    ripley_k_single,
)

__all__ = [
    "CoverageRun", "link_sir", "run_coverage", "PointPattern", "Window", "HexGrid", "SimConfig",
    "SimConfigError", "replication_rng", "sample_dpp", "sample_hex_perturbed", "sample_many", "sample_pattern", "sample_ppp",
    "spectral_modes", "Envelope", "EnvelopeResult", "GridMismatchError", "analytic_k", "build_envelope",
    "empirical_esf", "empirical_nn", "envelope_test", "ripley_k", "ripley_k_single",
]
