"""Proper-inner-product (Q-metric) toolkit for non-hermitian diagonalizable Hamiltonians."""

from ._jit import backend_name
from .errors import (
    DimensionMismatch,
    GridTooCoarse,
    InputError,
    InvalidMatrix,
    NonConvergence,
    NonDiagonalizable,
    NumericalError,
    ParseError,
    ProjectionZero,
    QNormalError,
    Singular,
    SpecInfeasible,
    StepSizeTooLarge,
    ValidationError,
    ZeroVector,
)
from .linalg import EigOptions, SpectralDecomposition, eig, expm, inverse, spectral_exp

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "EigOptions",
    "SpectralDecomposition",
    "eig",
    "expm",
    "inverse",
    "spectral_exp",
    "QNormalError",
    "InputError",
    "NumericalError",
    "InvalidMatrix",
    "DimensionMismatch",
    "GridTooCoarse",
    "SpecInfeasible",
    "ParseError",
    "ValidationError",
    "ZeroVector",
    "ProjectionZero",
    "Singular",
    "NonConvergence",
    "NonDiagonalizable",
    "StepSizeTooLarge",
]
