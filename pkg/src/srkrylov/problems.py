"""Problem ingestion and synthetic generators.

Matrix Market coordinate files (real, ``symmetric`` or ``general``) can be
read and written; generators provide desk-scale symmetric test matrices:
a scaled 1-d Laplacian, the 5-point 2-d Laplacian, and its shifted
(indefinite) variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, ParseError
from .linalg import validate_csr


@dataclass
class ProblemInstance:
    A: sp.csr_matrix
    label: str
    origin: str  # "matrix-market-file" | "generator"
    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.A.shape[0] != self.A.shape[1]:
            raise DimensionMismatchError("problem matrix must be square")
        if not np.any(self.d):
            raise DimensionMismatchError("starting vector d must be nonzero")


def default_start_vector(A: sp.csr_matrix) -> np.ndarray:
    """d = A * ones, the default starting vector for generated problems."""
    return A @ np.ones(A.shape[1])


def read_matrix_market(path) -> sp.csr_matrix:
    """Read a real coordinate Matrix Market file into validated CSR.

    For ``symmetric`` files the stored triangle is mirrored; ``general``
    files must be numerically symmetric. 1-based indices, ``%`` comments.
    """
    rows, cols, vals = [], [], []
    n_rows = n_cols = nnz = None
    qualifier = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if lineno == 1:
                parts = line.lower().split()
                if len(parts) != 5 or parts[0] != "%%matrixmarket":
                    raise ParseError(f"{path}:{lineno}: missing MatrixMarket banner")
                if parts[1:4] != ["matrix", "coordinate", "real"]:
                    raise ParseError(f"{path}:{lineno}: only 'matrix coordinate real' is supported")
                qualifier = parts[4]
                if qualifier not in ("symmetric", "general"):
                    raise ParseError(f"{path}:{lineno}: qualifier must be symmetric or general")
                continue
            if not line or line.startswith("%"):
                continue
            fields = line.split()
            try:
                if n_rows is None:
                    n_rows, n_cols, nnz = (int(f) for f in fields)
                    continue
                i, j = int(fields[0]), int(fields[1])
                v = float(fields[2])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: malformed entry {line!r}") from None
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise ParseError(f"{path}:{lineno}: index ({i},{j}) out of range")
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if n_rows is None:
        raise ParseError(f"{path}: missing size line")
    if n_rows != n_cols:
        raise ParseError(f"{path}: non-square matrix {n_rows}x{n_cols}")
    if len(vals) != nnz:
        raise ParseError(f"{path}: header promises {nnz} entries, found {len(vals)}")
    if not vals:
        raise ParseError(f"{path}: empty pattern")
    if qualifier == "symmetric":
        mr, mc, mv = [], [], []
        for i, j, v in zip(rows, cols, vals):
            if j > i:
                raise ParseError(f"{path}: symmetric file stores entry above the diagonal")
            if i != j:
                mr.append(j)
                mc.append(i)
                mv.append(v)
        rows += mr
        cols += mc
        vals += mv
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    try:
        return validate_csr(A, hermitian=True)
    except DimensionMismatchError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_matrix_market(path, A: sp.csr_matrix) -> None:
    """Write the lower triangle of a symmetric CSR matrix in coordinate form."""
    A = sp.csr_matrix(A)
    L = sp.tril(A).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {L.nnz}\n")
        for i, j, v in zip(L.row, L.col, L.data):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def gen_laplace_1d(N: int, scale: float) -> sp.csr_matrix:
    """scale * tridiag(-1, 2, -1) of order N."""
    if N < 2:
        raise DimensionMismatchError("gen_laplace_1d requires N >= 2")
    main = np.full(N, 2.0 * scale)
    off = np.full(N - 1, -1.0 * scale)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    return validate_csr(A, hermitian=True)


def gen_laplace_2d(n: int) -> sp.csr_matrix:
    """5-point stencil on the n x n interior grid (N = n^2, SPD)."""
    if n < 2:
        raise DimensionMismatchError("gen_laplace_2d requires n >= 2")
    I = sp.identity(n, format="csr")
    T = gen_laplace_1d(n, 1.0)
    A = sp.kron(T, I) + sp.kron(I, T)
    return validate_csr(A.tocsr(), hermitian=True)


def gen_shifted_laplace(n: int, sigma: float) -> sp.csr_matrix:
    """gen_laplace_2d(n) - sigma * I; indefinite for interior shifts."""
    if n < 2:
        raise DimensionMismatchError("gen_shifted_laplace requires n >= 2")
    A = gen_laplace_2d(n) - sigma * sp.identity(n * n, format="csr")
    return validate_csr(A.tocsr(), hermitian=True)
