from .core import (
    EigOptions,
    SpectralDecomposition,
    as_matrix,
    eig,
    expm,
    inverse,
    lu,
    norm,
    solve,
    sort_order,
    spectral_exp,
)

__all__ = [
    "EigOptions",
    "SpectralDecomposition",
    "as_matrix",
    "eig",
    "expm",
    "inverse",
    "lu",
    "norm",
    "solve",
    "sort_order",
    "spectral_exp",
]
