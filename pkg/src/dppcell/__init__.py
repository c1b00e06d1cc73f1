"""Coverage analysis of cellular networks modelled by determinantal point processes."""

from .curves import CurveNonConvergence, CurveTable
from .kernels import (
    DegenerateAnchor,
    ExistenceError,
    Family,
    KernelModel,
    PalmKernel,
    covariance,
    existence_check,
    palm_kernel,
    repulsiveness_mu,
    spectral_density,
)

__version__ = "0.1.0"

__all__ = [
    "CurveNonConvergence", "CurveTable", "DegenerateAnchor", "ExistenceError", "Family", "KernelModel",
    "PalmKernel", "covariance", "existence_check", "palm_kernel", "repulsiveness_mu", "spectral_density",
    "__version__",
]
