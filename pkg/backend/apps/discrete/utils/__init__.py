from .weights import (
    WeightFunction,
    GeometricWeight,
    ExpPolynomialWeight,
    GammaRatioWeight,
    TabulatedWeight,
    CallableWeight,
    MeasureContractError,
    constant_weight,
    krawtchouk_weight,
)
from .measure import MeasureSpec, LogWeight, log_weight, log_weights_batch
from .ensemble import (
    PatternEnsemble,
    MeasureRefused,
    build_ensemble,
    partition_function,
    expectation,
    REFUSAL_THRESHOLD,
)
from .ratios import (
    HorizontalMove,
    DiagonalMove,
    RejectedMove,
    apply_move,
    move_single_site,
    shift_ratio,
    single_site_ratio,
)
from .mcmc import (
    mcmc_sample,
    run_chains,
    acceptance_probability,
    proposal_probability,
    empirical_frequencies,
    lowest_pattern,
)
from .marginal import marginal_measure, measure_table, total_variation

__all__ = [
    "WeightFunction",
    "GeometricWeight",
    "ExpPolynomialWeight",
    "GammaRatioWeight",
    "TabulatedWeight",
    "CallableWeight",
    "MeasureContractError",
    "constant_weight",
    "krawtchouk_weight",
    "MeasureSpec",
    "LogWeight",
    "log_weight",
    "log_weights_batch",
    "PatternEnsemble",
    "MeasureRefused",
    "build_ensemble",
    "partition_function",
    "expectation",
    "REFUSAL_THRESHOLD",
    "HorizontalMove",
    "DiagonalMove",
    "RejectedMove",
    "apply_move",
    "move_single_site",
    "shift_ratio",
    "single_site_ratio",
    "mcmc_sample",
    "run_chains",
    "acceptance_probability",
    "proposal_probability",
    "empirical_frequencies",
    "lowest_pattern",
    "marginal_measure",
    "measure_table",
    "total_variation",
]
