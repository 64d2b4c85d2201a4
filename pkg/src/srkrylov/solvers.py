"""Minimal-residual solvers for symmetric systems.

``pcr_solve`` is a preconditioned conjugate residual variant driven by the
three-term scalar recurrences (tau, xi, eta); it can harvest a recycling
basis on the fly: normalized strided basis columns, the tridiagonal
projection entries, and one boundary pair per block. ``pminres_solve`` is a
standard preconditioned MINRES used purely as a baseline.

Both report the history of ||M^{-1} r_j||_2 with the residual recomputed
from the iterate where needed, so the two histories are directly
comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError
from .linalg import TridiagonalMatrix, as_vector, check_finite, dot
from .operators import DeflationPair, MvecCounter, OperatorChain
from .preconditioners import Preconditioner


@dataclass
class HarvestConfig:
    """ell blocks of k stored columns each, stride J; the harvested
    dimension is m = ell * k * J."""

    J: int
    k: int
    ell: int

    def __post_init__(self):
        if min(self.J, self.k, self.ell) < 1:
            raise ConfigError("harvest parameters J, k, ell must all be >= 1")

    @property
    def kJ(self) -> int:
        return self.k * self.J

    @property
    def m(self) -> int:
        return self.ell * self.k * self.J


@dataclass
class LanczosHarvest:
    config: HarvestConfig
    T: TridiagonalMatrix
    strided: list  # per block: (N, k) array of normalized u columns
    boundary_pairs: list  # per block: DeflationPair at the block end
    full_u: np.ndarray | None = None  # (N, m), test scaffolding only
    full_v: np.ndarray | None = None

    @property
    def complete(self) -> bool:
        return (
            self.T.order == self.config.m
            and len(self.boundary_pairs) == self.config.ell
            and all(s.shape[1] == self.config.k for s in self.strided)
        )


@dataclass
class SolveReport:
    iterations: int
    mvec_a: int
    mvec_minv: int
    residual_history: np.ndarray  # ||M^{-1} r_j||_2, length iterations + 1
    termination: str  # tolerance-met | max-iter | breakdown
    final_x: np.ndarray
    ref_norm: float  # ||M^{-1} b||_2 used for the relative criterion
    theta_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    m_norm_history: np.ndarray | None = None
    iterates: list | None = None  # test scaffolding: x_0..x_j when requested

    @property
    def converged(self) -> bool:
        return self.termination == "tolerance-met"

    @property
    def relres(self) -> np.ndarray:
        ref = self.ref_norm if self.ref_norm > 0 else 1.0
        return self.residual_history / ref


def _true_m_norm(A, M, b, x, rh=None):
    r = b - A @ x
    rh = M.apply_inv(r) if rh is None else rh
    return math.sqrt(max(float(np.dot(r, rh)), 0.0))


def pcr_solve(
    chain: OperatorChain,
    b,
    x0=None,
    tol: float = 1e-8,
    max_iter: int | None = None,
    harvest: HarvestConfig | None = None,
    keep_full_basis: bool = False,
    track_m_norms: bool = False,
    keep_iterates: bool = False,
) -> tuple[SolveReport, LanczosHarvest | None]:
    """Conjugate residual iteration on chain.A preconditioned by chain.M.

    With deflation pairs on the chain this runs the post-projection phase:
    the update directions keep their images orthogonal to the deflated
    space, so the combined search space stays residual-optimal.

    Stops when ||M^{-1} r||_2 <= tol * ||M^{-1} b||_2; when harvesting, the
    iteration continues past the tolerance until the harvest is complete
    (or max_iter is hit).
    """
    n = chain.n
    b = as_vector(b, n)
    if max_iter is None:
        max_iter = 4 * n
    if tol <= 0:
        raise ConfigError("tol must be positive")
    x = np.zeros(n) if x0 is None else as_vector(x0, n).copy()
    if x0 is None or not np.any(x):
        r = b.copy()
        rh = chain.apply_minv(r)
        ref = float(np.linalg.norm(rh))
    else:
        r = b - chain.apply_a(x)
        rh = chain.apply_minv(r)
        ref = float(np.linalg.norm(chain.M.apply_inv(b)))
    a0, m0 = chain.counter.snapshot()

    hc = harvest
    alphas: list[float] = []
    betas: list[float] = []
    strided_cols: list[np.ndarray] = []
    pairs: list[DeflationPair] = []
    full_u: list[np.ndarray] = []
    full_v: list[np.ndarray] = []

    history = [float(np.linalg.norm(rh))]
    thetas: list[float] = []
    m_norms = [_true_m_norm(chain.A, chain.M, b, x, rh)] if track_m_norms else None
    iterates = [x.copy()] if keep_iterates else None

    tau = 1.0
    u = np.zeros(n)
    v = np.zeros(n)
    eta_prev = None
    termination = "max-iter"
    threshold = tol * ref

    if history[0] <= threshold and hc is None:
        termination = "tolerance-met"
        max_iter = 0

    for j in range(max_iter):
        vh, dh, uh = chain.mod_a_func(rh)
        xi = dot(dh, v)
        u = uh - (xi / tau) * u
        v = vh - (xi / tau) * v
        tauh = dot(dh, v)
        if not np.isfinite(tauh) or tauh <= 0.0:
            termination = "breakdown"
            break
        if hc is not None:
            if j >= 1 and len(alphas) < hc.m:
                alphas.append((tau - xi) / eta_prev)
                betas.append(-math.sqrt(tau * tauh) / eta_prev)
            if j < hc.m:
                scale = 1.0 / math.sqrt(tauh)
                if j % hc.J == 0:
                    strided_cols.append(scale * u)
                if (j + 1) % hc.kJ == 0:
                    pairs.append(DeflationPair(scale * u, scale * v))
                if keep_full_basis:
                    full_u.append(scale * u)
                    full_v.append(scale * v)
        eta = dot(dh, rh)
        thetas.append(tauh + xi * xi / tau)
        if eta == 0.0 or not np.isfinite(eta):
            termination = "breakdown"
            break
        eta_prev = eta
        tau = tauh
        x = x + (eta / tau) * u
        rh = rh - (eta / tau) * v
        check_finite(rh, "preconditioned residual")
        history.append(float(np.linalg.norm(rh)))
        if track_m_norms:
            m_norms.append(_true_m_norm(chain.A, chain.M, b, x))
        if keep_iterates:
            iterates.append(x.copy())
        harvest_done = hc is None or len(alphas) >= hc.m
        if history[-1] <= threshold and harvest_done:
            termination = "tolerance-met"
            break

    a1, m1 = chain.counter.snapshot()
    report = SolveReport(
        iterations=len(history) - 1,
        mvec_a=a1 - a0,
        mvec_minv=m1 - m0,
        residual_history=np.array(history),
        termination=termination,
        final_x=x,
        ref_norm=ref,
        theta_history=np.array(thetas),
        m_norm_history=np.array(m_norms) if track_m_norms else None,
        iterates=iterates,
    )
    out_harvest = None
    if hc is not None:
        nblk = len(strided_cols) // hc.k
        strided = [
            np.column_stack(strided_cols[i * hc.k:(i + 1) * hc.k]) for i in range(nblk)
        ]
        out_harvest = LanczosHarvest(
            config=hc,
            T=TridiagonalMatrix(np.array(alphas), np.array(betas)),
            strided=strided,
            boundary_pairs=pairs,
            full_u=np.column_stack(full_u) if full_u else None,
            full_v=np.column_stack(full_v) if full_v else None,
        )
    return report, out_harvest


def pminres_solve(
    A: sp.csr_matrix,
    M: Preconditioner,
    b,
    x0=None,
    tol: float = 1e-8,
    max_iter: int | None = None,
    counter: MvecCounter | None = None,
    track_m_norms: bool = False,
) -> SolveReport:
    """Standard preconditioned MINRES (Lanczos + Givens QR).

    The reported history is ||M^{-1}(b - A x_j)||_2 recomputed from the
    iterate each step as an uncounted diagnostic, so it is directly
    comparable to ``pcr_solve``. The counted cost is one A-apply and one
    M^{-1}-apply per iteration.
    """
    n = A.shape[0]
    b = as_vector(b, n)
    if max_iter is None:
        max_iter = 4 * n
    counter = counter if counter is not None else MvecCounter()
    x = np.zeros(n) if x0 is None else as_vector(x0, n).copy()
    a0, m0 = counter.snapshot()

    r1 = b - A @ x if np.any(x) else b.copy()
    y = M.apply_inv(r1)
    counter.n_minv += 1
    ref = float(np.linalg.norm(y)) if not np.any(x) else float(np.linalg.norm(M.apply_inv(b)))
    history = [float(np.linalg.norm(y))]
    m_norms = [_true_m_norm(A, M, b, x, y if not np.any(x) else None)] if track_m_norms else None
    threshold = tol * ref
    termination = "max-iter"
    if history[0] <= threshold:
        termination = "tolerance-met"
        max_iter = 0

    beta1 = float(np.dot(r1, y))
    if beta1 < 0:
        raise DimensionMismatchError("preconditioner is not positive definite")
    beta1 = math.sqrt(beta1) if beta1 > 0 else 0.0
    oldb = 0.0
    beta = beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1

    for itn in range(1, max_iter + 1):
        if beta == 0.0:
            termination = "tolerance-met"  # lucky breakdown: exact solution reached
            break
        s = 1.0 / beta
        vv = s * y
        y = A @ vv
        counter.n_a += 1
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(np.dot(vv, y))
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = M.apply_inv(r2)
        counter.n_minv += 1
        oldb = beta
        beta = float(np.dot(r2, y))
        if beta < 0:
            termination = "breakdown"
            break
        beta = math.sqrt(beta)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = math.sqrt(gbar * gbar + beta * beta)
        gamma = max(gamma, np.finfo(float).eps)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (vv - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w

        rh = M.apply_inv(b - A @ x)  # uncounted diagnostic
        history.append(float(np.linalg.norm(rh)))
        if track_m_norms:
            m_norms.append(_true_m_norm(A, M, b, x))
        if history[-1] <= threshold:
            termination = "tolerance-met"
            break

    a1, m1 = counter.snapshot()
    return SolveReport(
        iterations=len(history) - 1,
        mvec_a=a1 - a0,
        mvec_minv=m1 - m0,
        residual_history=np.array(history),
        termination=termination,
        final_x=x,
        ref_norm=ref,
        m_norm_history=np.array(m_norms) if track_m_norms else None,
    )
