"""Operator chains: plain and deflated system operators with cost counting.

An :class:`OperatorChain` bundles the system matrix A, the preconditioner M,
and an ordered list of deflation pairs. Every application of A or M^{-1}
through the chain increments a shared counter; one paired (A, M^{-1})
application is the cost unit of the whole library.

The deflated operator is (I - d v^H) A where d = A u for a stored pair
(u, v) with v = M^{-1} d. d itself is never stored: both the forward and
the adjoint application only need v (and the pairing coefficient), so each
pair costs two vectors of memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError
from .linalg import check_finite, dot, spmv
from .preconditioners import Preconditioner


@dataclass
class MvecCounter:
    n_a: int = 0
    n_minv: int = 0

    def snapshot(self) -> tuple[int, int]:
        return (self.n_a, self.n_minv)


@dataclass
class DeflationPair:
    """Boundary pair (u_m, v_m) of a basis block. v_m = M^{-1} A u_m up to
    the normalization carried by the solve that produced it."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape:
            raise DimensionMismatchError("deflation pair length mismatch")


@dataclass
class OperatorChain:
    A: sp.csr_matrix
    M: Preconditioner
    deflations: tuple[DeflationPair, ...] = ()
    counter: MvecCounter = field(default_factory=MvecCounter)

    def __post_init__(self):
        self.deflations = tuple(self.deflations)
        if self.A.shape[0] != self.M.n:
            raise DimensionMismatchError("matrix and preconditioner dimensions differ")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def with_deflations(self, pairs) -> "OperatorChain":
        """Same A, M and counter, different deflation list."""
        return OperatorChain(self.A, self.M, tuple(pairs), self.counter)

    def apply_a(self, x: np.ndarray) -> np.ndarray:
        self.counter.n_a += 1
        return spmv(self.A, x)

    def apply_minv(self, x: np.ndarray) -> np.ndarray:
        self.counter.n_minv += 1
        return check_finite(self.M.apply_inv(x), "preconditioner application")

    def a_func(self, rh: np.ndarray):
        """(v̂, d̂, û) with û = r̂, d̂ = A r̂, v̂ = M^{-1} d̂."""
        uh = rh.copy()
        dh = self.apply_a(rh)
        vh = self.apply_minv(dh)
        return vh, dh, uh

    def mod_a_func(self, rh: np.ndarray):
        """a_func followed by the deflation corrections. The caller is
        responsible for r̂ being orthogonal to the deflated images already;
        this is not enforced here."""
        vh, dh, uh = self.a_func(rh)
        for pair in self.deflations:
            g = dot(pair.v, dh)
            vh = vh - g * pair.v
            uh = uh - g * pair.u
        return vh, dh, uh

    def forward(self, w: np.ndarray) -> np.ndarray:
        """M^{-1} Ã w, one A-apply and one M^{-1}-apply regardless of the
        number of deflation pairs."""
        d = self.apply_a(w)
        v = self.apply_minv(d)
        for pair in self.deflations:
            v = v - dot(pair.v, d) * pair.v
        return v

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """(M^{-1} Ã)^T z = A (M^{-1} z - Σ ⟨v_j, z⟩ v_j), using the
        symmetry of A and M."""
        w = self.apply_minv(z)
        for pair in self.deflations:
            w = w - dot(pair.v, z) * pair.v
        return self.apply_a(w)
