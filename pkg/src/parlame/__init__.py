"""Parabolic Lame system: kernels, layer potentials, caloric polynomials and
regularized reconstruction for the lateral Cauchy problem."""

from .errors import (
    AmbiguousTraceError,
    IllConditionedError,
    InvalidGeometryError,
    NotParabolicError,
    NumericalError,
    ParlameError,
    UnsupportedDimensionError,
)
from .kernels import LameCoefficients, check_parabolicity, heat_kernel, kernel_derivatives, lame_kernel

__version__ = "0.1.0"

__all__ = [
    "AmbiguousTraceError",
    "IllConditionedError",
    "InvalidGeometryError",
    "LameCoefficients",
    "NotParabolicError",
    "NumericalError",
    "ParlameError",
    "UnsupportedDimensionError",
    "check_parabolicity",
    "heat_kernel",
    "kernel_derivatives",
    "lame_kernel",
    "__version__",
]
