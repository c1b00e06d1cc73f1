"""Numerical building blocks: quasi-random points, determinants, Bessel functions, radial quadrature, series and Fredholm evaluators."""

from .fredholm import FredholmOperator, FredholmResult, far_field_log, fredholm_pgfl, near_radius
from .linalg import NumericError, psd_det
from .radial import RadialProposal, RadialWeight, gl_panels, radial_integral
from .series import (
    SeriesJob,
    SeriesNonConvergence,
    SeriesResult,
    eval_determinantal_series,
    hadamard_tail,
    weight_mass,
)
from .sobol import MAX_DIMENSION, SobolConfigError, SobolStream, sobol_block, sobol_next_batch
from .special import SERIES_SWITCH, bessel_i0, bessel_i0e

__all__ = [
    "FredholmOperator", "FredholmResult", "far_field_log", "fredholm_pgfl", "near_radius",
    "NumericError", "psd_det", "RadialProposal", "RadialWeight", "gl_panels", "radial_integral",
    "SeriesJob", "SeriesNonConvergence", "SeriesResult", "eval_determinantal_series", "hadamard_tail",
    "weight_mass", "MAX_DIMENSION", "SobolConfigError", "SobolStream", "sobol_block", "sobol_next_batch",
    "SERIES_SWITCH", "bessel_i0", "bessel_i0e",
]
