"""Numerical orthonormality diagnostics for wavelets on the Heisenberg group.

The package samples functions on uniform grids, computes Weyl-transform
kernels by oscillatory quadrature, evaluates the lattice-sum diagnostics that
characterize orthonormal wavelet and twisted wavelet systems, and checks them
against brute-force Gram matrices.
"""

from .errors import (ConfigurationError, DegenerateCandidateError, DomainCoverageError,
                     HwaveError, NumericalError, SingularScaleError)
from .numerics import (Field, Field2D, Field3D, Grid1D, TruncationPolicy, integrate,
                       inner_product, make_grid, oscillatory_ft, periodize_sum)

__version__ = "0.1.0"

from .signals import SignalSpec, build_signal, hermite_basis  # noqa: E402

__all__ = [
    "ConfigurationError", "DegenerateCandidateError", "DomainCoverageError", "HwaveError",
    "NumericalError", "SingularScaleError", "Field", "Field2D", "Field3D", "Grid1D",
    "TruncationPolicy", "integrate", "inner_product", "make_grid", "oscillatory_ft",
    "periodize_sum", "SignalSpec", "build_signal", "hermite_basis", "__version__",
]
