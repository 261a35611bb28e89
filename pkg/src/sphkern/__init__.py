"""Isotropic positive-definite kernels on spheres: coefficient sequences,
Sobolev orders and kernel cubature."""

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    DomainError,
    KernelParameterError,
    NonConvergenceError,
    NumericalError,
    PoleError,
    QuadratureError,
    SphkernError,
)
from .kernels import Family, IsotropicKernel, SpherePoint, eval_kernel, geodesic_distance
from .schoenberg import (
    FourierSequence,
    Provenance,
    SchoenbergSequence,
    fourier_from_schoenberg,
    project_to_sphere,
    quadrature_coeffs,
    reconstruct_kernel,
    schoenberg_coeffs,
)
from .sobolev import DecayFit, HarmonicCoefficients, fit_decay
from .cubature import CubatureRule, DiscrepancyReport, optimal_weights, worst_case_error

__version__ = "0.1.0"

__all__ = [
    "SphkernError",
    "NumericalError",
    "PoleError",
    "DomainError",
    "DivergenceError",
    "NonConvergenceError",
    "QuadratureError",
    "KernelParameterError",
    "DimensionMismatchError",
    "Family",
    "IsotropicKernel",
    "SpherePoint",
    "eval_kernel",
    "geodesic_distance",
    "Provenance",
    "SchoenbergSequence",
    "FourierSequence",
    "fourier_from_schoenberg",
    "project_to_sphere",
    "quadrature_coeffs",
    "reconstruct_kernel",
    "schoenberg_coeffs",
    "DecayFit",
    "HarmonicCoefficients",
    "fit_decay",
    "CubatureRule",
    "DiscrepancyReport",
    "optimal_weights",
    "worst_case_error",
]
