__all__ = [
    "ConfigError",
    "DenseSizeError",
    "FormatError",
    "LevelOverflowError",
    "NormalizationWarning",
    "ParameterError",
    "RankError",
    "RepresentationStateError",
    "TreeMismatchError",
    "DimensionTree",
    "build_tree",
    "HTRep",
    "ModeFrame",
    "zeros",
    "from_dense",
    "to_dense",
    "ranks",
    "add",
    "scale",
    "inner",
    "norm",
    "orthonormalize",
    "hsvd",
    "truncate",
    "lambda_estimate",
    "GrowthSequence",
    "contractions",
    "select_product_set",
    "mu_estimate",
    "restrict",
    "recompress",
    "coarsen",
    "combined_reduce",
    "kappa_p",
    "kappa_c",
    "get_basis",
    "basis_selfcheck",
    "volterra_entry",
    "fk_coeffs",
    "LowRankOp",
    "OperatorLadder",
    "RHSSpec",
    "volterra_operator",
    "sum_operator",
    "operator_constants",
    "error_bound",
    "support_bound",
    "apply_adaptive",
    "rhs_assemble",
    "SolverParams",
    "IterationTrace",
    "solve",
    "residual_certificate",
    "a_posteriori_bound",
    "OpCounter",
    "counting",
    "recount_operations",
    "ExperimentConfig",
    "run_experiment",
    "sparsity_diagnostics",
    "emit_plots_data",
]

from . import experiment, io
from ._alpert import basis_selfcheck, fk_coeffs, get_basis, volterra_entry
from ._dimtree import DimensionTree, build_tree
from ._exceptions import (
    ConfigError,
    DenseSizeError,
    FormatError,
    LevelOverflowError,
    NormalizationWarning,
    ParameterError,
    RankError,
    RepresentationStateError,
    TreeMismatchError,
)
from ._htensor import (
    HTRep,
    ModeFrame,
    add,
    from_dense,
    hsvd,
    inner,
    lambda_estimate,
    norm,
    orthonormalize,
    ranks,
    scale,
    to_dense,
    truncate,
    zeros,
)
from ._lowrank import (
    LowRankOp,
    OperatorLadder,
    RHSSpec,
    apply_adaptive,
    error_bound,
    operator_constants,
    rhs_assemble,
    sum_operator,
    support_bound,
    volterra_operator,
)
from ._ops import OpCounter, counting, recount_operations
from ._reduce import (
    GrowthSequence,
    coarsen,
    combined_reduce,
    contractions,
    kappa_c,
    kappa_p,
    mu_estimate,
    recompress,
    restrict,
    select_product_set,
)
from ._solver import (
    IterationTrace,
    SolverParams,
    a_posteriori_bound,
    residual_certificate,
    solve,
)
from .experiment import (
    ExperimentConfig,
    emit_plots_data,
    run_experiment,
    sparsity_diagnostics,
)
