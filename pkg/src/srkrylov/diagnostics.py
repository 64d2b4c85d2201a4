"""Stability maps and condition estimation.

The two maps guide the choice of block sizes for recycling: Q measures the
loss of M-orthogonality across the harvested basis (it would be the
identity in exact arithmetic), G maps the 2-norm condition of every
contiguous section of the harvested tridiagonal matrix. Both are emitted
as log10 heatmap data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError
from .linalg import TridiagonalMatrix
from .preconditioners import Preconditioner, make_identity
from .solvers import pminres_solve

Q_MEMORY_LIMIT = 2000


def compute_q(M: Preconditioner, V: np.ndarray) -> np.ndarray:
    """Gram matrix Q[i, j] = <M v_i, v_j> of explicitly retained basis
    columns (diagnostics mode only)."""
    if V.ndim != 2:
        raise DimensionMismatchError("expected a column matrix of basis vectors")
    m = V.shape[1]
    if m > Q_MEMORY_LIMIT:
        raise ConfigError(f"basis too large for the Gram map (m > {Q_MEMORY_LIMIT})")
    MV = np.column_stack([M.apply_fwd(V[:, j]) for j in range(m)])
    return MV.T @ V


def _neg_count(diag: np.ndarray, sub: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below x,
    via the Sturm sequence of leading-minor pivots."""
    tiny = np.finfo(float).tiny
    count = 0
    d = 1.0
    for i in range(diag.size):
        off = sub[i - 1] if i > 0 else 0.0
        d = diag[i] - x - (off * off) / d
        if d == 0.0:
            d = tiny
        if d < 0.0:
            count += 1
    return count


def _kth_eigenvalue(diag: np.ndarray, sub: np.ndarray, k: int) -> float:
    """k-th smallest eigenvalue (1-based) by bisection on Gershgorin
    bounds."""
    radius = np.zeros(diag.size)
    if sub.size:
        radius[:-1] += np.abs(sub)
        radius[1:] += np.abs(sub)
    lo = float(np.min(diag - radius))
    hi = float(np.max(diag + radius))
    span = max(hi - lo, 1.0)
    lo -= 1e-12 * span
    hi += 1e-12 * span
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if _neg_count(diag, sub, mid) >= k:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(abs(lo), abs(hi), 1.0):
            break
    return 0.5 * (lo + hi)


def tridiag_cond2(diag: np.ndarray, sub: np.ndarray) -> float:
    """2-norm condition of a symmetric tridiagonal matrix from its extreme
    eigenvalues and the eigenvalue nearest zero; inf for singular."""
    m = diag.size
    if m == 1:
        return 1.0 if diag[0] != 0.0 else math.inf
    lam_lo = _kth_eigenvalue(diag, sub, 1)
    lam_hi = _kth_eigenvalue(diag, sub, m)
    nu = _neg_count(diag, sub, 0.0)
    if nu == 0:
        small = abs(lam_lo)
    elif nu == m:
        small = abs(lam_hi)
    else:
        small = min(
            abs(_kth_eigenvalue(diag, sub, nu)),
            abs(_kth_eigenvalue(diag, sub, nu + 1)),
        )
    big = max(abs(lam_lo), abs(lam_hi))
    if small == 0.0:
        return math.inf
    return big / small


def compute_g(T: TridiagonalMatrix, band_limit: int = 200) -> np.ndarray:
    """G[i, j] = condition of the tridiagonal section spanning rows i..j,
    for all sections no wider than band_limit; entries beyond the band are
    NaN, the matrix is filled symmetrically."""
    m = T.order
    G = np.full((m, m), np.nan)
    for i in range(m):
        G[i, i] = 1.0
        for j in range(i + 1, min(i + band_limit, m)):
            diag, sub = T.section(i, j - i + 1)
            G[i, j] = G[j, i] = tridiag_cond2(diag, sub)
    return G


@dataclass
class CondEstimate:
    value: float
    low_confidence: bool


def condest_2norm(A: sp.csr_matrix, iters: int = 200) -> CondEstimate:
    """Estimate kappa_2 of a symmetric matrix: power iteration for the
    largest |eigenvalue|, inverse iteration (inner minimal-residual
    solves) for the smallest."""
    n = A.shape[0]
    rng = np.random.default_rng(0)
    M = make_identity(n)

    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    lam_big = 0.0
    for _ in range(iters):
        z = A @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return CondEstimate(math.inf, True)
        prev = lam_big
        lam_big = nz
        w = z / nz
        if abs(lam_big - prev) <= 1e-10 * lam_big:
            break

    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    lam_small = None
    low_confidence = False
    for _ in range(min(iters, 50)):
        rep = pminres_solve(A, M, w, tol=1e-10, max_iter=20 * n)
        if not rep.converged:
            low_confidence = True
        z = rep.final_x
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return CondEstimate(math.inf, True)
        prev = lam_small
        lam_small = 1.0 / nz
        w = z / nz
        if prev is not None and abs(lam_small - prev) <= 1e-8 * lam_small:
            break
    return CondEstimate(lam_big / lam_small, low_confidence)


def emit_map_csv(path, matrix: np.ndarray) -> None:
    """Write a map in log10|.| form, one CSV row per matrix row; exact
    zeros and NaN band entries are emitted as empty fields."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        m = matrix.shape[1]
        fh.write(",".join(f"c{j + 1}" for j in range(m)) + "\n")
        for row in matrix:
            cells = []
            for val in row:
                if math.isnan(val) or val == 0.0:
                    cells.append("")
                elif math.isinf(val):
                    cells.append("inf")
                else:
                    cells.append(f"{math.log10(abs(val)):.17g}")
            fh.write(",".join(cells) + "\n")
