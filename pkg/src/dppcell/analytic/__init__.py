"""Analytic coverage metrics: spatial distributions, interference and SIR."""

from .interference import (
    Association,
    ConditioningError,
    InterferenceQuery,
    angular_kernel_square,
    laplace_interference,
    laplace_weight,
    mean_interference_fixed,
    mean_interference_nearest,
    palm_deficit,
    tail_spot_check,
)
from .pathloss import DivergentInterference, PathLossKind, PathLossModel
from .sir import (
    db_to_linear,
    outer_radius,
    parse_grid,
    ppp_coverage,
    sir_ccdf,
    sir_ccdf_conditional,
    sir_ccdf_diag_approx,
)
from .spatial import curve_meta, empty_space_fn, esf_density, nearest_neighbor_fn, void_probability

__all__ = [
    "Association", "ConditioningError", "InterferenceQuery", "angular_kernel_square", "laplace_interference",
    "laplace_weight", "mean_interference_fixed", "mean_interference_nearest", "palm_deficit", "tail_spot_check",
    "DivergentInterference", "PathLossKind", "PathLossModel", "db_to_linear", "outer_radius", "parse_grid",
    "ppp_coverage", "sir_ccdf", "sir_ccdf_conditional", "sir_ccdf_diag_approx", "curve_meta", "empty_space_fn",
    "esf_density", "nearest_neighbor_fn", "void_probability",
]
