"""Dense vector and sparse matrix kernels.

Everything is real double precision. Vectors are plain 1-d numpy arrays;
sparse matrices are scipy CSR with sorted indices. All reductions happen
through numpy/BLAS with a fixed (single-threaded) schedule so repeated runs
are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, NumericalBreakdownError


def as_vector(x, n: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected 1-d vector, got shape {v.shape}")
    if v.size == 0:
        raise DimensionMismatchError("degenerate zero-length vector")
    if n is not None and v.size != n:
        raise DimensionMismatchError(f"expected length {n}, got {v.size}")
    return v


def check_finite(arr: np.ndarray, context: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalBreakdownError(f"non-finite values in {context}")
    return arr


def validate_csr(A, hermitian: bool = True) -> sp.csr_matrix:
    """Validate a CSR matrix: sorted strictly-increasing column indices per
    row, finite values, and (optionally) exact numeric symmetry."""
    A = sp.csr_matrix(A, dtype=np.float64)
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise DimensionMismatchError("degenerate empty matrix")
    A.sort_indices()
    for i in range(A.shape[0]):
        cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
        if cols.size > 1 and np.any(np.diff(cols) <= 0):
            raise DimensionMismatchError(f"row {i}: column indices not strictly increasing")
    check_finite(A.data, "sparse matrix values")
    if hermitian:
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"hermitian flag on non-square matrix {A.shape}")
        if abs(A - A.T).max() != 0.0:
            raise DimensionMismatchError("matrix is not exactly symmetric")
    return A


def spmv(A: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    if A.shape[1] != x.shape[0]:
        raise DimensionMismatchError(f"spmv: {A.shape} @ {x.shape}")
    y = A @ x
    return check_finite(y, "spmv result")


def dot(x: np.ndarray, y: np.ndarray) -> float:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dot: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def axpy(a: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"axpy: {x.shape} vs {y.shape}")
    return y + a * x


def m_dot(m_apply, x: np.ndarray, y: np.ndarray) -> float:
    """Inner product <M x, y> for a symmetric positive definite M.

    ``m_apply`` is the forward application of M. Library call sites avoid
    this by pairing untransformed and preconditioned vectors instead; this
    helper exists for tests and diagnostics.
    """
    if x.shape != y.shape:
        raise DimensionMismatchError(f"m_dot: {x.shape} vs {y.shape}")
    return float(np.dot(m_apply(x), y))


@dataclass
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix harvested from a Lanczos-type solve.

    ``alpha`` holds the diagonal entries a_1..a_m. ``beta`` holds the
    off-diagonal entries b_2..b_{m+1}; the trailing b_{m+1} is the coupling
    coefficient past the harvested range, so len(beta) == len(alpha).
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.alpha.shape != self.beta.shape:
            raise DimensionMismatchError("alpha and beta must have equal length")

    @property
    def order(self) -> int:
        return self.alpha.size

    def section(self, start: int, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and interior sub-diagonal of the square section
        [start, start+size) (0-based)."""
        if start < 0 or start + size > self.order:
            raise DimensionMismatchError("section out of range")
        return self.alpha[start:start + size], self.beta[start:start + size - 1]

    def to_dense(self, size: int | None = None) -> np.ndarray:
        n = self.order if size is None else size
        d, s = self.section(0, n)
        T = np.diag(d)
        for i in range(n - 1):
            T[i, i + 1] = T[i + 1, i] = s[i]
        return T


def tridiag_matvec(diag: np.ndarray, sub: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = T x for a symmetric tridiagonal T given by its diagonal and
    sub-diagonal."""
    y = diag * x
    if sub.size:
        y[:-1] += sub * x[1:]
        y[1:] += sub * x[:-1]
    return y
