"""Low-rank Krylov approximations of Frechet derivatives L_f(A, eta y z^H)."""

from .bounds import (
    Inapplicable,
    SpectralData,
    aposteriori_block_estimate,
    aposteriori_diff_estimate,
    apriori_exp_bound,
    apriori_extended_slope,
    apriori_log_bound,
    apriori_stieltjes_bound,
)
from .errors import (
    DeflationDetected,
    DimensionMismatch,
    FrechetError,
    MaxDimensionReached,
    NotHermitian,
    NumericalError,
    ParseError,
    QuadratureNotConverged,
    SeriousBreakdown,
    Singular,
    SpectrumOnClosedNegativeAxis,
    StartVectorsBiorthogonal,
    UnsupportedField,
    UnsupportedFunction,
    ZeroStartVector,
)
from .frechet import (
    ConvergenceRecord,
    LowRankFrechet,
    RankOneDirection,
    apply,
    arnoldi_frechet,
    block_lanczos_frechet,
    from_dense,
    lanczos_frechet,
    load_factors,
    lowrank_diff_norm,
    make_builder,
    materialize,
    rational_frechet,
    run_to_tolerance,
    save_factors,
    shift_invert_pole,
    singular_values,
    twosided_frechet,
)
from .krylov import (
    arnoldi,
    block_lanczos,
    extended_poles,
    lanczos,
    rational_arnoldi,
    ritz_extremes,
    two_sided_lanczos,
)
from .matfun import FunctionSpec, block_frechet_kernel, expm, frechet_small, funm, logm, stieltjes_eval
from .oracle import (
    SensitivityResult,
    reference_frechet_block,
    reference_frechet_dd,
    reference_frechet_dd_rank_one,
    sensitivity_topk,
    synthetic_decay_matrix,
)
from .sparse import (
    SparseMatrix,
    as_sparse,
    convdiff2d,
    laplace2d,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)

__version__ = "0.1.0"
