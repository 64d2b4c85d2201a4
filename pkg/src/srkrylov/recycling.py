"""Recycling driver: block projections, post-iterations, cost accounting.

A :class:`RecycleBasis` is an ordered list of short representations built
from one harvesting solve. For a new right-hand side the driver projects
the residual onto each block's image in turn (each projection costs
exactly 2J paired matrix-vector products), then continues with the
conjugate residual iteration on the operator deflated by the last block's
boundary pair, so the final iterate is residual-optimal over the combined
recycled + new space.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, OrthogonalityCollapseError, ParseError
from .linalg import as_vector, dot
from .operators import DeflationPair, OperatorChain
from .shortrep import (
    BlockPermutation,
    RFactor,
    ShortRepresentation,
    apply_U,
    apply_UH,
    build_r_factor,
)
from .solvers import HarvestConfig, LanczosHarvest, SolveReport, pcr_solve


@dataclass
class RecycleBasis:
    config: HarvestConfig
    blocks: list  # of ShortRepresentation

    @property
    def total_dim(self) -> int:
        return self.config.m

    @property
    def stored_columns(self) -> int:
        # k strided columns plus the boundary pair, per block
        return self.config.ell * (self.config.k + 2)


@dataclass
class RecycleReport:
    projection_mvec_a: int
    projection_mvec_minv: int
    projection_history: np.ndarray  # ||M^{-1} r||_2 after 0..ell blocks
    post_report: SolveReport
    stored_columns: int

    @property
    def total_mvec_a(self) -> int:
        return self.projection_mvec_a + self.post_report.mvec_a


def cost_formula(ell: int, k: int, J: int) -> tuple[int, int]:
    """(stored column-vectors, matrix-vector products per projection pass)."""
    return ell * (k + 2), 2 * ell * J


def cost_ledger(basis: RecycleBasis) -> tuple[int, int]:
    c = basis.config
    return cost_formula(c.ell, c.k, c.J)


def build_recycle_basis(chain: OperatorChain, harvest: LanczosHarvest) -> RecycleBasis:
    """Assemble short representations from a harvesting solve.

    Block i's operator chain deflates block i-1's boundary pair; blocks
    after the first carry the closed-form seam correction derived from the
    coupling coefficient across the block boundary.
    """
    if not harvest.complete:
        raise DimensionMismatchError(
            "harvest is incomplete (solve ended before the harvest range)"
        )
    cfg = harvest.config
    kJ = cfg.kJ
    blocks = []
    for i in range(cfg.ell):
        diag, sub = harvest.T.section(i * kJ, kJ)
        rf = build_r_factor(diag, sub, cfg.k, cfg.J)
        if i == 0:
            blk_chain = chain.with_deflations(())
            seam = None
        else:
            blk_chain = chain.with_deflations((harvest.boundary_pairs[i - 1],))
            beta_seam = float(harvest.T.beta[i * kJ - 1])
            seam = np.zeros(kJ)
            seam[1:cfg.J] = -beta_seam * rf.dense[0, 0:cfg.J - 1]
        blocks.append(
            ShortRepresentation(
                u_tilde=harvest.strided[i],
                r_factor=rf,
                perm=BlockPermutation(cfg.k, cfg.J),
                chain=blk_chain,
                boundary=harvest.boundary_pairs[i],
                seam=seam,
            )
        )
    return RecycleBasis(cfg, blocks)


def recycle_project(block: ShortRepresentation, x: np.ndarray, r: np.ndarray):
    """One block of the projection x += U U^T A M^{-1} r, r -= A (that step).

    Counted cost: 2J matrix-vector products with A (and as many with
    M^{-1}): one for A M^{-1} r, J-1 inside the power scheme, J-1 inside
    the Horner scheme, one for the residual update.
    """
    chain = block.chain
    rh = chain.apply_minv(r)
    w = chain.apply_a(rh)
    y = apply_UH(block, w)
    s = apply_U(block, y)
    return x + s, r - chain.apply_a(s)


def srpcr_ap_solve(
    basis: RecycleBasis,
    chain: OperatorChain,
    b,
    x0=None,
    tol: float = 1e-8,
    max_post_iter: int | None = None,
    track_m_norms: bool = False,
) -> tuple[SolveReport, RecycleReport]:
    """Project onto every recycled block, then iterate on the deflated
    operator until the tolerance is met.

    If a projection increases ||M^{-1} r||_M beyond round-off the recycled
    basis has lost orthogonality (blocks too large for this system) and the
    solve aborts rather than silently degrading.
    """
    n = chain.n
    b = as_vector(b, n)
    M = chain.M
    x = np.zeros(n) if x0 is None else as_vector(x0, n).copy()
    r = b.copy() if not np.any(x) else b - chain.A @ x

    def m_norm(rr):
        return math.sqrt(max(dot(rr, M.apply_inv(rr)), 0.0))

    ref = float(np.linalg.norm(M.apply_inv(b)))
    proj_history = [float(np.linalg.norm(M.apply_inv(r)))]
    m_norms = [m_norm(r)]
    a0, m0 = chain.counter.snapshot()
    for block in basis.blocks:
        x, r = recycle_project(block, x, r)
        proj_history.append(float(np.linalg.norm(M.apply_inv(r))))
        m_norms.append(m_norm(r))
        if m_norms[-1] > (1.0 + 1e-8) * m_norms[-2]:
            raise OrthogonalityCollapseError(
                "projection increased the residual norm; recycled basis has "
                "lost orthogonality (reduce block sizes)"
            )
    a1, m1 = chain.counter.snapshot()

    # The deflated iteration assumes the residual image carries no component
    # along the boundary direction. The block projections guarantee that
    # only relative to the initial residual; after strong reduction the
    # leftover can dominate the current residual and the deflated recurrence
    # would preserve it forever. One residual-optimal re-projection onto the
    # boundary column (a no-op in exact arithmetic, one extra MVec) restores
    # the premise at the current scale.
    pair = basis.blocks[-1].boundary
    alpha = dot(pair.v, r)
    if alpha != 0.0:
        x = x + alpha * pair.u
        r = r - alpha * chain.apply_a(pair.u)
    a2, m2 = chain.counter.snapshot()

    post_chain = chain.with_deflations((pair,))
    post_report, _ = pcr_solve(
        post_chain,
        b,
        x0=x,
        tol=tol,
        max_iter=max_post_iter,
        track_m_norms=track_m_norms,
    )

    history = np.concatenate([proj_history, post_report.residual_history[1:]])
    combined = SolveReport(
        iterations=post_report.iterations,
        mvec_a=(a2 - a0) + post_report.mvec_a,
        mvec_minv=(m2 - m0) + post_report.mvec_minv,
        residual_history=history,
        termination=post_report.termination,
        final_x=post_report.final_x,
        ref_norm=ref,
        theta_history=post_report.theta_history,
        m_norm_history=(
            np.concatenate([m_norms, post_report.m_norm_history[1:]])
            if track_m_norms
            else None
        ),
    )
    recycle_report = RecycleReport(
        projection_mvec_a=a1 - a0,
        projection_mvec_minv=m1 - m0,
        projection_history=np.array(proj_history),
        post_report=post_report,
        stored_columns=basis.stored_columns,
    )
    return combined, recycle_report


_MAGIC = b"SRKB"
_VERSION = 1


def save_basis(path, basis: RecycleBasis) -> None:
    """Flat binary archive: fixed header, then per block the strided
    columns, the dense triangular factor, the seam vector (zeros for the
    first block), and the boundary pair. Little-endian doubles."""
    cfg = basis.config
    n = basis.blocks[0].u_tilde.shape[0]
    kJ = cfg.kJ
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIIII", _MAGIC, _VERSION, n, cfg.ell, cfg.k, cfg.J))
        for blk in basis.blocks:
            fh.write(np.ascontiguousarray(blk.u_tilde, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(blk.r_factor.dense, dtype="<f8").tobytes())
            seam = blk.seam if blk.seam is not None else np.zeros(kJ)
            fh.write(np.ascontiguousarray(seam, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(blk.boundary.u, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(blk.boundary.v, dtype="<f8").tobytes())


def load_basis(path, chain: OperatorChain) -> RecycleBasis:
    """Rebuild a recycle basis against the given operator chain (the same
    A and M it was harvested from)."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sIIIII"))
        if len(head) < struct.calcsize("<4sIIIII"):
            raise ParseError(f"{path}: truncated archive header")
        magic, version, n, ell, k, J = struct.unpack("<4sIIIII", head)
        if magic != _MAGIC:
            raise ParseError(f"{path}: not a recycle-basis archive")
        if version != _VERSION:
            raise ParseError(f"{path}: unsupported archive version {version}")
        if n != chain.n:
            raise DimensionMismatchError(
                f"archive dimension {n} does not match operator dimension {chain.n}"
            )
        cfg = HarvestConfig(J=J, k=k, ell=ell)
        kJ = cfg.kJ

        def read_array(shape):
            count = int(np.prod(shape))
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ParseError(f"{path}: truncated archive body")
            return np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)

        blocks = []
        prev_pair = None
        for i in range(ell):
            u_tilde = read_array((n, k))
            dense = read_array((kJ, kJ))
            seam = read_array((kJ,))
            pu = read_array((n,))
            pv = read_array((n,))
            pair = DeflationPair(pu, pv)
            blk_chain = chain.with_deflations(() if i == 0 else (prev_pair,))
            blocks.append(
                ShortRepresentation(
                    u_tilde=u_tilde,
                    r_factor=RFactor(k, J, dense),
                    perm=BlockPermutation(k, J),
                    chain=blk_chain,
                    boundary=pair,
                    seam=None if i == 0 else seam,
                )
            )
            prev_pair = pair
    return RecycleBasis(cfg, blocks)
