"""Hermitian positive definite preconditioners.

Each preconditioner exposes ``apply_inv`` (the M^{-1} application used by
the solvers) and ``apply_fwd`` (the forward M, needed by tests and
diagnostics that evaluate M-inner products directly).

Kinds: identity, jacobi, signed-tridiagonal band, and zero-fill incomplete
Cholesky with a diagonal-shift retry loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, DimensionMismatchError, IcBreakdownError, NotSpdError
from .linalg import tridiag_matvec


@dataclass
class Preconditioner:
    kind: str
    n: int
    _inv: Callable = field(repr=False)
    _fwd: Callable = field(repr=False)

    def apply_inv(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.n,):
            raise DimensionMismatchError(f"apply_inv: expected ({self.n},), got {x.shape}")
        return self._inv(x)

    def apply_fwd(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.n,):
            raise DimensionMismatchError(f"apply_fwd: expected ({self.n},), got {x.shape}")
        return self._fwd(x)


def make_identity(n: int) -> Preconditioner:
    return Preconditioner("identity", n, lambda x: x.copy(), lambda x: x.copy())


def make_jacobi(A: sp.csr_matrix) -> Preconditioner:
    d = A.diagonal().astype(np.float64)
    if np.any(d == 0.0):
        raise NotSpdError("jacobi: zero diagonal entry")
    d = np.abs(d)
    inv_d = 1.0 / d
    return Preconditioner("jacobi", A.shape[0], lambda x: inv_d * x, lambda x: d * x)


def _tridiag_band(A: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    n = A.shape[0]
    diag = A.diagonal().astype(np.float64)
    sub = np.zeros(n - 1)
    coo = sp.tril(A, k=-1).tocoo()
    mask = coo.row - coo.col == 1
    sub[coo.col[mask]] = coo.data[mask]
    return diag, sub


def make_signed_tridiag(A: sp.csr_matrix) -> Preconditioner:
    """Tridiagonal band of A scaled rowwise by the sign of the diagonal,
    factorized once; a symmetric band that fails to be positive definite is
    reported instead of silently used."""
    n = A.shape[0]
    diag, sub = _tridiag_band(A)
    if np.any(diag == 0.0):
        raise NotSpdError("signed-tridiagonal: zero diagonal entry")
    s = np.sign(diag)
    m_diag = s * diag  # = |diag|
    m_sub = s[1:] * sub
    if np.any(s[:-1] != s[1:]):
        # rowwise sign scaling breaks symmetry where adjacent signs differ,
        # unless the coupling entry vanishes there
        bad = (s[:-1] != s[1:]) & (sub != 0.0)
        if np.any(bad):
            raise NotSpdError("signed-tridiagonal: sign change across a nonzero band entry")
    ab = np.zeros((2, n))
    ab[0, 1:] = m_sub
    ab[1, :] = m_diag
    try:
        cb = scipy.linalg.cholesky_banded(ab, lower=False)
    except scipy.linalg.LinAlgError:
        raise NotSpdError("signed-tridiagonal: band is not positive definite") from None

    def inv(x):
        return scipy.linalg.cho_solve_banded((cb, False), x)

    def fwd(x):
        return tridiag_matvec(m_diag, m_sub, x)

    return Preconditioner("signed-tridiagonal", n, inv, fwd)


def _ic0_factor(A: sp.csr_matrix, shift: float) -> sp.csr_matrix:
    """Zero-fill incomplete Cholesky on the lower-triangular pattern of A.

    Raises ValueError on a nonpositive pivot; the caller owns the retry loop.
    """
    n = A.shape[0]
    L_low = sp.tril(A, k=-1).tocsr()
    diag = A.diagonal().astype(np.float64) + shift
    rows: list[dict[int, float]] = [dict() for _ in range(n)]
    ld = np.zeros(n)
    for i in range(n):
        ri = rows[i]
        lo, hi = L_low.indptr[i], L_low.indptr[i + 1]
        for j, aij in zip(L_low.indices[lo:hi], L_low.data[lo:hi]):
            rj = rows[j]
            s = aij
            if ri and rj:
                if len(ri) <= len(rj):
                    for kk, vv in ri.items():
                        if kk < j and kk in rj:
                            s -= vv * rj[kk]
                else:
                    for kk, vv in rj.items():
                        if kk < j and kk in ri:
                            s -= vv * ri[kk]
            ri[j] = s / ld[j]
        piv = diag[i] - sum(v * v for v in ri.values())
        if piv <= 0.0:
            raise ValueError(f"nonpositive pivot at row {i}")
        ld[i] = np.sqrt(piv)
    ii, jj, vv = [], [], []
    for i in range(n):
        for j, v in rows[i].items():
            ii.append(i)
            jj.append(j)
            vv.append(v)
        ii.append(i)
        jj.append(i)
        vv.append(ld[i])
    return sp.coo_matrix((vv, (ii, jj)), shape=(n, n)).tocsr()


def make_ic0(A: sp.csr_matrix, shift: float = 0.0) -> Preconditioner:
    """IC(0) with diagonal-shift retries: on pivot breakdown the shift starts
    at 1e-3 times the mean diagonal and doubles, at most 8 times."""
    n = A.shape[0]
    attempt = float(shift)
    L = None
    for retry in range(9):
        try:
            L = _ic0_factor(A, attempt)
            break
        except ValueError:
            if retry == 8:
                break
            if attempt == 0.0:
                attempt = 1e-3 * float(np.mean(A.diagonal()))
                if attempt <= 0.0:
                    attempt = 1e-3
            else:
                attempt *= 2.0
    if L is None:
        raise IcBreakdownError("incomplete Cholesky broke down after shift retries")
    lu = spla.splu(L.tocsc(), permc_spec="NATURAL", options=dict(DiagPivotThresh=0.0))
    Lt = L.T.tocsr()

    def inv(x):
        return lu.solve(lu.solve(x, trans="N"), trans="T")

    def fwd(x):
        return L @ (Lt @ x)

    return Preconditioner("ic0", n, inv, fwd)


_FACTORIES = {
    "identity": lambda A: make_identity(A.shape[0]),
    "jacobi": make_jacobi,
    "signed-tridiagonal": make_signed_tridiag,
    "ic0": make_ic0,
}


def make_preconditioner(kind: str, A: sp.csr_matrix) -> Preconditioner:
    if kind not in _FACTORIES:
        raise ConfigError(f"unknown preconditioner kind {kind!r}")
    return _FACTORIES[kind](A)
