import numpy as np
import pytest
import scipy.sparse as sp

from srkrylov import (
    HarvestConfig,
    OperatorChain,
    gen_laplace_2d,
    make_jacobi,
    pcr_solve,
)


def dense_minv(M, n):
    """Materialize M^{-1} column by column (test oracle only)."""
    return np.column_stack([M.apply_inv(np.eye(n)[:, j]) for j in range(n)])


def dense_m(M, n):
    return np.column_stack([M.apply_fwd(np.eye(n)[:, j]) for j in range(n)])


def random_spd_csr(rng, n, shift=None):
    Q = rng.standard_normal((n, n))
    A = Q + Q.T + (shift if shift is not None else 2.5 * n) * np.eye(n)
    return sp.csr_matrix(A)


def m_norm(M, r):
    rh = M.apply_inv(r)
    return float(np.sqrt(max(np.dot(r, rh), 0.0)))


@pytest.fixture(scope="session")
def harvested_144():
    """Shared harvesting run on the 144-dim grid Laplacian with Jacobi
    preconditioning: 2 blocks of 3 stored columns, stride 4 (m = 24).

    The right-hand side is a seeded random vector; the natural choice
    A*ones lives in a symmetry-reduced invariant subspace of dimension
    below the harvest target and exhausts the solver first.
    """
    A = gen_laplace_2d(12)
    M = make_jacobi(A)
    rng = np.random.default_rng(7)
    b1 = rng.standard_normal(A.shape[0])
    b1 /= np.linalg.norm(b1)
    chain = OperatorChain(A, M)
    report, harvest = pcr_solve(
        chain,
        b1,
        tol=1e-12,
        max_iter=400,
        harvest=HarvestConfig(J=4, k=3, ell=2),
        keep_full_basis=True,
    )
    assert harvest is not None and harvest.complete
    return dict(A=A, M=M, b1=b1, chain=chain, report=report, harvest=harvest, rng_seed=7)
