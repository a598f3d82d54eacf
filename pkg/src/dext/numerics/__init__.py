from .banded import (
    cholesky_factor,
    cholesky_solve,
    lowest_symmetric_eigenpairs,
    tridiagonal_matrix,
)
from .quadrature import decade_edges, log_quad, quad

__all__ = [
    "cholesky_factor",
    "cholesky_solve",
    "decade_edges",
    "log_quad",
    "lowest_symmetric_eigenpairs",
    "quad",
    "tridiagonal_matrix",
]
