"""Statistical models of top-k partial orders.

Six model variants over the space of top-k partial orders: composite
models (c-i, c-ci, c-ld) pairing a length distribution with a
Plackett-Luce ranking, and augmented models (a, a-pd, a-s) that treat
end-of-list as a choosable END token.
"""

from .augmented import (
    AugmentedModel,
    AugmentedNaiveParams,
    PositionDependentParams,
    StratifiedAugmentedParams,
    augmented_log_prob,
    sample_augmented,
    sample_augmented_dataset,
)
from .backend import backend_name
from .composite import (
    CompositeModel,
    composite_log_prob,
    sample_composite,
    sample_composite_dataset,
)
from .assignment import (
    Market,
    Matching,
    OutcomeRates,
    deferred_acceptance,
    find_blocking_pair,
    make_market,
    outcome_stats,
    uniform_priorities,
)
from .dataio import (
    ParseError,
    SummaryStats,
    dataset_hash,
    load_checkpoint,
    load_covariates,
    parse_preflib,
    save_checkpoint,
    summary_stats,
    write_dataset,
)
from .estimation import (
    ALL_VARIANTS,
    FitConfig,
    FitResult,
    NonFiniteLossError,
    fit,
    grid_search,
    kfold_split,
    model_log_prob,
    nll,
    stratify_dataset,
)
from .lengthdist import CategoricalLengthParams, PoissonLengthParams
from .orders import (
    CovariateTensor,
    Dataset,
    PartialOrder,
    Universe,
    enumerate_partial_orders,
    extension_count,
    validate_order,
)
from .evaluation import (
    DemandShares,
    EvalReport,
    LengthStats,
    TestNLL,
    build_eval_report,
    demand_shares,
    emit_plot_data,
    length_pmf,
    length_stats,
    replicate_sample,
    test_nll,
    tv_distance,
)
from .ranking import PLParams, StratifiedPLParams, pl_log_marginal, stratified_log_prob

__all__ = [
    "ALL_VARIANTS",
    "AugmentedModel",
    "AugmentedNaiveParams",
    "CategoricalLengthParams",
    "CompositeModel",
    "CovariateTensor",
    "Dataset",
    "DemandShares",
    "EvalReport",
    "FitConfig",
    "FitResult",
    "LengthStats",
    "Market",
    "Matching",
    "NonFiniteLossError",
    "OutcomeRates",
    "PLParams",
    "ParseError",
    "PartialOrder",
    "PoissonLengthParams",
    "PositionDependentParams",
    "StratifiedAugmentedParams",
    "StratifiedPLParams",
    "SummaryStats",
    "TestNLL",
    "Universe",
    "augmented_log_prob",
    "backend_name",
    "build_eval_report",
    "composite_log_prob",
    "dataset_hash",
    "deferred_acceptance",
    "demand_shares",
    "emit_plot_data",
    "enumerate_partial_orders",
    "extension_count",
    "find_blocking_pair",
    "fit",
    "grid_search",
    "kfold_split",
    "length_pmf",
    "length_stats",
    "load_checkpoint",
    "load_covariates",
    "make_market",
    "model_log_prob",
    "nll",
    "outcome_stats",
    "parse_preflib",
    "pl_log_marginal",
    "replicate_sample",
    "sample_augmented",
    "sample_augmented_dataset",
    "sample_composite",
    "sample_composite_dataset",
    "save_checkpoint",
    "stratified_log_prob",
    "stratify_dataset",
    "summary_stats",
    "test_nll",
    "tv_distance",
    "uniform_priorities",
    "validate_order",
    "write_dataset",
]

__version__ = "0.1.0"
