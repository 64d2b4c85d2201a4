import numpy as np
import pytest
import scipy.sparse as sp

from srkrylov import (
    DeflationPair,
    HarvestConfig,
    MvecCounter,
    OperatorChain,
    make_identity,
    make_jacobi,
    pcr_solve,
)
from srkrylov.errors import DimensionMismatchError

from conftest import dense_minv, random_spd_csr


def make_chain(rng, n, n_pairs=0):
    """Chain on a random SPD system; deflation pairs are harvested from a
    real solve so that v = M^{-1} A u holds for them."""
    A = random_spd_csr(rng, n)
    M = make_jacobi(A)
    chain = OperatorChain(A, M)
    pairs = []
    if n_pairs:
        b = rng.standard_normal(n)
        _rep, hv = pcr_solve(
            chain, b, tol=1e-14, max_iter=n,
            harvest=HarvestConfig(J=1, k=4, ell=n_pairs),
        )
        pairs = hv.boundary_pairs[:n_pairs]
    return chain.with_deflations(pairs)


def test_a_func_identity():
    n = 4
    chain = OperatorChain(sp.identity(n, format="csr"), make_identity(n))
    r = np.arange(1.0, 5.0)
    vh, dh, uh = chain.a_func(r)
    for out in (vh, dh, uh):
        np.testing.assert_array_equal(out, r)


def test_a_func_diagonal():
    chain = OperatorChain(sp.csr_matrix(np.diag([2.0, 2.0])), make_identity(2))
    e1 = np.array([1.0, 0.0])
    vh, dh, uh = chain.a_func(e1)
    np.testing.assert_array_equal(vh, 2 * e1)
    np.testing.assert_array_equal(dh, 2 * e1)
    np.testing.assert_array_equal(uh, e1)


def test_a_func_dense_oracle():
    rng = np.random.default_rng(0)
    chain = make_chain(rng, 12)
    Minv = dense_minv(chain.M, 12)
    r = rng.standard_normal(12)
    vh, dh, uh = chain.a_func(r)
    np.testing.assert_allclose(vh, Minv @ chain.A.toarray() @ r, rtol=1e-12, atol=1e-12)


def test_mod_a_func_empty_equals_a_func():
    rng = np.random.default_rng(1)
    chain = make_chain(rng, 10)
    r = rng.standard_normal(10)
    for a, b in zip(chain.a_func(r), chain.mod_a_func(r)):
        np.testing.assert_array_equal(a, b)


def test_mod_a_func_zero_coefficient_no_change():
    rng = np.random.default_rng(2)
    chain = make_chain(rng, 10, n_pairs=1)
    pair = chain.deflations[0]
    # choose r with A r orthogonal to v_m
    r = rng.standard_normal(10)
    Ar = chain.A.toarray() @ r
    r = r - (pair.v @ Ar) / (pair.v @ (chain.A.toarray() @ pair.v)) * pair.v
    vh, dh, uh = chain.mod_a_func(r)
    vh0, dh0, uh0 = chain.a_func(r)
    np.testing.assert_allclose(vh, vh0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(uh, uh0, rtol=0, atol=1e-12)


def test_chain_forward_matches_dense_deflated_operator():
    rng = np.random.default_rng(3)
    chain = make_chain(rng, 14, n_pairs=1)
    pair = chain.deflations[0]
    A = chain.A.toarray()
    Minv = dense_minv(chain.M, 14)
    d_m = A @ pair.u  # stored in the test only
    Atil = (np.eye(14) - np.outer(d_m, pair.v)) @ A
    w = rng.standard_normal(14)
    np.testing.assert_allclose(chain.forward(w), Minv @ Atil @ w, rtol=1e-11, atol=1e-11)


def test_chain_adjoint_matches_dense():
    rng = np.random.default_rng(4)
    chain = make_chain(rng, 14, n_pairs=1)
    pair = chain.deflations[0]
    A = chain.A.toarray()
    Minv = dense_minv(chain.M, 14)
    d_m = A @ pair.u
    Atil = (np.eye(14) - np.outer(d_m, pair.v)) @ A
    z = rng.standard_normal(14)
    np.testing.assert_allclose(chain.adjoint(z), (Minv @ Atil).T @ z, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("n_pairs", [0, 1, 2])
def test_adjoint_pairing(n_pairs):
    rng = np.random.default_rng(5 + n_pairs)
    chain = make_chain(rng, 16, n_pairs=n_pairs)
    for _ in range(5):
        w = rng.standard_normal(16)
        z = rng.standard_normal(16)
        lhs = np.dot(chain.forward(w), z)
        rhs = np.dot(w, chain.adjoint(z))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)


def test_forward_image_orthogonal_to_deflated_direction():
    rng = np.random.default_rng(6)
    chain = make_chain(rng, 12, n_pairs=1)
    pair = chain.deflations[0]
    w = rng.standard_normal(12)
    out = chain.forward(w)
    # the image of the deflated operator carries no v_m component in the
    # M-inner product
    Mout = chain.M.apply_fwd(out)
    assert abs(np.dot(Mout, pair.v)) <= 1e-10 * np.linalg.norm(Mout)


def test_counter_increments():
    rng = np.random.default_rng(7)
    chain = make_chain(rng, 10, n_pairs=2)
    counter = chain.counter
    a0, m0 = counter.snapshot()
    chain.forward(rng.standard_normal(10))
    assert counter.snapshot() == (a0 + 1, m0 + 1)
    chain.adjoint(rng.standard_normal(10))
    assert counter.snapshot() == (a0 + 2, m0 + 2)
    chain.mod_a_func(rng.standard_normal(10))
    assert counter.snapshot() == (a0 + 3, m0 + 3)


def test_dimension_checks():
    chain = OperatorChain(sp.identity(3, format="csr"), make_identity(3))
    with pytest.raises(DimensionMismatchError):
        chain.apply_a(np.zeros(4))
    with pytest.raises(DimensionMismatchError):
        OperatorChain(sp.identity(3, format="csr"), make_identity(4))
