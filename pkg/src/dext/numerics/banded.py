"""Symmetric tridiagonal helpers on top of scipy's LAPACK band routines."""

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh_tridiagonal


def upper_banded(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """Upper band storage (2, n) expected by cholesky_banded."""
    n = diag.shape[0]
    ab = np.zeros((2, n))
    ab[0, 1:] = off
    ab[1, :] = diag
    return ab


def cholesky_factor(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """Raises numpy.linalg.LinAlgError when the matrix is not positive definite."""
    return cholesky_banded(upper_banded(diag, off), lower=False, check_finite=True)


def cholesky_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return cho_solve_banded((factor, False), rhs, check_finite=False)


def tridiagonal_matrix(diag: np.ndarray, off: np.ndarray) -> sparse.csr_matrix:
    n = diag.shape[0]
    if n == 1:
        return sparse.csr_matrix(diag.reshape(1, 1))
    return sparse.diags([off, diag, off], [-1, 0, 1], shape=(n, n), format="csr")


def lowest_symmetric_eigenpairs(
    diag: np.ndarray, off: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """k smallest eigenpairs of a symmetric tridiagonal matrix, ascending."""
    n = diag.shape[0]
    k = min(k, n)
    if n == 1:
        return diag.copy(), np.ones((1, 1))
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
