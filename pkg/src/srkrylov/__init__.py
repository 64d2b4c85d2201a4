"""Krylov subspace recycling for sequences of symmetric linear systems.

Solve A x_i = b_i with fixed A: harvest a compressed basis from the first
solve (strided columns + tridiagonal entries + boundary pairs), then for
every later right-hand side project onto the recycled space and continue
with a deflated conjugate residual iteration that keeps the combined
search space residual-optimal.
"""

from .errors import (
    ConfigError,
    DimensionMismatchError,
    IcBreakdownError,
    NotSpdError,
    NumericalBreakdownError,
    OrthogonalityCollapseError,
    ParseError,
    RSingularError,
    SequenceDegenerateError,
    SrkError,
)
from .diagnostics import (
    CondEstimate,
    compute_g,
    compute_q,
    condest_2norm,
    emit_map_csv,
    tridiag_cond2,
)
from .linalg import TridiagonalMatrix
from .operators import DeflationPair, MvecCounter, OperatorChain
from .preconditioners import (
    Preconditioner,
    make_ic0,
    make_identity,
    make_jacobi,
    make_preconditioner,
    make_signed_tridiag,
)
from .problems import (
    ProblemInstance,
    default_start_vector,
    gen_laplace_1d,
    gen_laplace_2d,
    gen_shifted_laplace,
    read_matrix_market,
    write_matrix_market,
)
from .recycling import (
    RecycleBasis,
    RecycleReport,
    build_recycle_basis,
    cost_formula,
    cost_ledger,
    load_basis,
    recycle_project,
    save_basis,
    srpcr_ap_solve,
)
from .sequences import RhsSequence, example31_sequence, gen_example31, gen_sequence
from .shortrep import (
    BlockPermutation,
    RFactor,
    ShortRepresentation,
    apply_U,
    apply_UH,
    build_r_factor,
    horner_apply,
    power_apply,
)
from .solvers import (
    HarvestConfig,
    LanczosHarvest,
    SolveReport,
    pcr_solve,
    pminres_solve,
)

__version__ = "0.1.0"
