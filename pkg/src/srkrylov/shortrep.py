"""Short representations of harvested basis blocks.

An m-column basis block U (m = k*J) is never stored. Instead we keep k
strided columns, a banded upper triangular factor R built from the
tridiagonal projection entries, and an implicit permutation; products with
U and U^T are reconstructed through J-1 applications of the block's
(possibly deflated) operator via Horner and power schemes.

For blocks after the first, the reconstruction through the deflated
operator misses exactly the coupling into the previous block's boundary
column: the defect is rank one along the previous boundary vector u_prev,
with coefficients -beta_seam * R[0, c-1] on the first column group. The
``seam`` vector carries those coefficients, and both apply directions add
the correction in closed form, restoring the identity U R = K Pi to
round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, RSingularError
from .linalg import dot, tridiag_matvec
from .operators import DeflationPair, OperatorChain


@dataclass
class BlockPermutation:
    """Index map between natural basis ordering (column 1 + i*J + j) and
    block-Krylov ordering (slot 1 + j*k + i); never stored as a matrix."""

    k: int
    J: int

    @property
    def size(self) -> int:
        return self.k * self.J

    def forward(self, y: np.ndarray) -> np.ndarray:
        if y.shape != (self.size,):
            raise DimensionMismatchError(f"permutation expects length {self.size}")
        return y.reshape(self.k, self.J).T.ravel().copy()

    def backward(self, y: np.ndarray) -> np.ndarray:
        if y.shape != (self.size,):
            raise DimensionMismatchError(f"permutation expects length {self.size}")
        return y.reshape(self.J, self.k).T.ravel().copy()


@dataclass
class RFactor:
    """Upper triangular factor with column 1 + i*J + j supported on rows
    [1 + i*J - j, 1 + i*J + j]; stored dense for the small kJ x kJ solves,
    the band structure is a build-time invariant."""

    k: int
    J: int
    dense: np.ndarray

    @property
    def size(self) -> int:
        return self.k * self.J

    def solve(self, y: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(self.dense, y, lower=False)

    def solve_adjoint(self, y: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(self.dense, y, lower=False, trans="T")


def build_r_factor(diag: np.ndarray, sub: np.ndarray, k: int, J: int) -> RFactor:
    """Column 1 + i*J + j of R is T^j e_{1+i*J} truncated to the block,
    built by repeated tridiagonal multiplies."""
    m = k * J
    if diag.shape != (m,) or sub.shape != (m - 1,):
        raise DimensionMismatchError("tridiagonal section does not match k*J")
    R = np.zeros((m, m))
    for i in range(k):
        col = np.zeros(m)
        col[i * J] = 1.0
        for j in range(J):
            R[:, i * J + j] = col
            if j + 1 < J:
                col = tridiag_matvec(diag, sub, col)
    d = np.diag(R)
    if np.any(d == 0.0) or not np.all(np.isfinite(R)):
        raise RSingularError("triangular factor is singular; shrink the block")
    return RFactor(k, J, R)


@dataclass
class ShortRepresentation:
    """(strided columns, R, permutation, operator chain) for one block.

    ``chain`` carries the deflation pairs of all previous blocks' boundaries
    (empty for the first block); ``boundary`` is this block's own boundary
    pair; ``seam`` is the rank-one coupling correction (None for the first
    block)."""

    u_tilde: np.ndarray  # (N, k)
    r_factor: RFactor
    perm: BlockPermutation
    chain: OperatorChain
    boundary: DeflationPair
    seam: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.perm.k

    @property
    def J(self) -> int:
        return self.perm.J

    @property
    def block_dim(self) -> int:
        return self.perm.size

    def _prev_u(self) -> np.ndarray:
        return self.chain.deflations[-1].u


def horner_apply(rep: ShortRepresentation, cb: np.ndarray) -> np.ndarray:
    """z = K_J(chain; Utilde) cb for block-ordered coefficients cb, using
    exactly J - 1 operator applications."""
    J, k = rep.J, rep.k
    if cb.shape != (rep.block_dim,):
        raise DimensionMismatchError(f"expected {rep.block_dim} coefficients")
    yb = cb.reshape(J, k)
    z = rep.u_tilde @ yb[J - 1]
    for j in range(J - 2, -1, -1):
        z = rep.chain.forward(z)
        z = z + rep.u_tilde @ yb[j]
    return z


def power_apply(rep: ShortRepresentation, z: np.ndarray) -> np.ndarray:
    """Block-ordered coefficients Utilde^T (adjoint^{j} z), j = 0..J-1,
    using exactly J - 1 operator applications."""
    ys = []
    zz = z
    for j in range(rep.J):
        ys.append(rep.u_tilde.T @ zz)
        if j + 1 < rep.J:
            zz = rep.chain.adjoint(zz)
    return np.concatenate(ys)


def apply_U(rep: ShortRepresentation, y: np.ndarray) -> np.ndarray:
    """U y through the representation: triangular solve, permute, Horner,
    plus the seam correction along the previous boundary vector."""
    c = rep.r_factor.solve(y)
    z = horner_apply(rep, rep.perm.forward(c))
    if rep.seam is not None:
        z = z + dot(rep.seam, c) * rep._prev_u()
    return z


def apply_UH(rep: ShortRepresentation, z: np.ndarray) -> np.ndarray:
    """U^T z through the representation: power scheme, permute back, seam
    correction, adjoint triangular solve."""
    cnat = rep.perm.backward(power_apply(rep, z))
    if rep.seam is not None:
        cnat = cnat + rep.seam * dot(rep._prev_u(), z)
    return rep.r_factor.solve_adjoint(cnat)
