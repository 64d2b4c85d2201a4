"""Orthonormal right-hand-side sequences for recycling benchmarks.

Three generator chains probe how well a recycled search space transfers
under preconditioning:

  kind A: span{b_1..b_q} = K_q(A^{-1}; d)
  kind B: span{b_1..b_q} = K_q(M A^{-1}; M^{-1} d)
  kind C: span{b_1..b_q} = K_q(A M^{-1}; d)

plus the two-vector counterexample pair on the scaled 1-d Laplacian where
recycling provably gains nothing (symmetric first RHS, antisymmetric
second).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError, SequenceDegenerateError
from .linalg import as_vector
from .preconditioners import Preconditioner, make_identity
from .problems import gen_laplace_1d
from .solvers import pminres_solve


@dataclass
class RhsSequence:
    kind: str  # A | B | C | example31
    vectors: list  # orthonormal b_1..b_q
    d: np.ndarray
    inner_tol: float

    @property
    def q(self) -> int:
        return len(self.vectors)


def _orthonormalize(raw: list[np.ndarray]) -> list[np.ndarray]:
    """Modified Gram-Schmidt with one reorthogonalization pass."""
    basis: list[np.ndarray] = []
    for idx, w in enumerate(raw):
        v = w.copy()
        for _ in range(2):
            for u in basis:
                v = v - np.dot(u, v) * u
        nrm = np.linalg.norm(v)
        if nrm < 1e-12 * max(np.linalg.norm(w), 1.0):
            raise SequenceDegenerateError(
                f"sequence vector {idx + 1} is linearly dependent on its predecessors"
            )
        basis.append(v / nrm)
    return basis


def gen_sequence(
    kind: str,
    A: sp.csr_matrix,
    M: Preconditioner,
    d,
    q: int,
    inner_tol: float = 1e-12,
) -> RhsSequence:
    """Generate q orthonormal right-hand sides of the given kind.

    Inverse applications are inner minimal-residual solves driven to
    inner_tol, far below the outer solver tolerances, so the span condition
    holds to working accuracy.
    """
    n = A.shape[0]
    d = as_vector(d, n)
    if q < 1 or q > n:
        raise ConfigError(f"q must be in [1, {n}]")
    if kind not in ("A", "B", "C"):
        raise ConfigError(f"unknown sequence kind {kind!r}")

    def a_inverse(w, index):
        rep = pminres_solve(A, M, w, tol=inner_tol, max_iter=20 * n)
        if not rep.converged:
            raise SequenceDegenerateError(
                f"inner solve for sequence vector {index + 1} did not reach {inner_tol}"
            )
        return rep.final_x

    raw = []
    if kind == "A":
        cur = d.copy()
        raw.append(cur)
        for i in range(1, q):
            cur = a_inverse(cur, i)
            raw.append(cur)
    elif kind == "B":
        cur = M.apply_inv(d)
        raw.append(cur)
        for i in range(1, q):
            cur = M.apply_fwd(a_inverse(cur, i))
            raw.append(cur)
    else:  # C
        cur = d.copy()
        raw.append(cur)
        for i in range(1, q):
            cur = A @ M.apply_inv(cur)
            raw.append(cur)
    return RhsSequence(kind, _orthonormalize(raw), d, inner_tol)


def gen_example31(N: int):
    """The counterexample pair: A = 1/(N+1)^2 tridiag(-1,2,-1), a symmetric
    and an antisymmetric right-hand side. The Krylov space of the first
    stays in the symmetric subspace, so it is orthogonal to everything the
    second solve needs."""
    if N % 2 != 0:
        raise DimensionMismatchError("example requires even N")
    A = gen_laplace_1d(N, 1.0 / (N + 1) ** 2)
    half = N // 2
    b1 = np.ones(N)
    b2 = np.concatenate([-np.ones(half), np.ones(half)])
    return A, b1, b2


def example31_sequence(N: int) -> tuple[sp.csr_matrix, Preconditioner, RhsSequence]:
    A, b1, b2 = gen_example31(N)
    M = make_identity(N)
    nb = float(np.linalg.norm(b1))
    seq = RhsSequence("example31", [b1 / nb, b2 / nb], b1, 0.0)
    return A, M, seq
