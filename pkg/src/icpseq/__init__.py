"""Invariant causal prediction for sequentially ordered data.

Given a time-ordered response and predictor matrix, the package tests
every predictor subset for invariance (a linear model with i.i.d.
Gaussian noise holding across all of time) via exact resampling of
scaled regression residuals, and intersects the accepted subsets into a
set of plausible causal predictors with a coverage guarantee.
"""

from .environments import (
    ComparisonSet,
    Environment,
    EnvironmentCollection,
    changepoint_environments,
    comparison_set,
    default_comparison,
    default_grid,
    equidistant_grid,
    grid_environments,
)
from .exceptions import (
    DegenerateKernelError,
    DegenerateResidualsError,
    EmptyComparisonSetError,
    IcpseqError,
    InvalidChangePointsError,
    InvalidGridError,
    LagTooLargeError,
    MissingTargetError,
    ParseError,
    RankDeficientError,
    TooManySubsetsError,
    ZeroDenominatorError,
)
from .experiments import EXPERIMENT_KINDS, ExperimentTable, run_experiment
from .generators import (
    LabeledDataset,
    ScmSpec,
    gen_changepoint_alternative,
    gen_invariant_gaussian,
    gen_scm_three_env,
    gen_sign_flip_example,
    gen_var_outlier,
    gen_var_shock,
    generate,
)
from .io import (
    ground_truth_to_dict,
    json_dumps,
    load_csv,
    outcome_to_dict,
    report_to_dict,
    table_to_csv_text,
    table_to_dict,
    write_dataset_csv,
    write_text,
)
from .regression import (
    Dataset,
    DesignMatrix,
    ScaledResiduals,
    build_lagged_design,
    least_squares,
    normalize_subset,
    ols_fit,
    scaled_residuals,
)
from .resampling import (
    MIN_RESAMPLES,
    DecoupledOutcome,
    NullSummary,
    TestConfig,
    TestOutcome,
    bonferroni_combined_pvalue,
    decoupled_test,
    null_residual_matrix,
    pvalue_from_null,
    resample_null,
    subset_id,
    test_invariance,
)
from .search import (
    SearchReport,
    SubsetResult,
    enumerate_subsets,
    lag_scan,
    prune_enabled_search,
    search,
)
from .statistics import (
    COMBINERS,
    FAMILIES,
    PerEnvironmentFit,
    StatisticEvaluator,
    StatisticSpec,
    combine,
    env_fit,
    hsic_time,
    smooth_shift,
    t1_coef,
    t2_var,
    t3_chow,
    t4_mean,
    t5_var,
)

__version__ = "0.1.0"

__all__ = [
    "COMBINERS",
    "ComparisonSet",
    "Dataset",
    "DecoupledOutcome",
    "DegenerateKernelError",
    "DegenerateResidualsError",
    "DesignMatrix",
    "EXPERIMENT_KINDS",
    "EmptyComparisonSetError",
    "Environment",
    "EnvironmentCollection",
    "ExperimentTable",
    "FAMILIES",
    "IcpseqError",
    "InvalidChangePointsError",
    "InvalidGridError",
    "LabeledDataset",
    "LagTooLargeError",
    "MIN_RESAMPLES",
    "MissingTargetError",
    "NullSummary",
    "ParseError",
    "PerEnvironmentFit",
    "RankDeficientError",
    "ScaledResiduals",
    "ScmSpec",
    "SearchReport",
    "StatisticEvaluator",
    "StatisticSpec",
    "SubsetResult",
    "TestConfig",
    "TestOutcome",
    "TooManySubsetsError",
    "ZeroDenominatorError",
    "bonferroni_combined_pvalue",
    "build_lagged_design",
    "changepoint_environments",
    "combine",
    "comparison_set",
    "decoupled_test",
    "default_comparison",
    "default_grid",
    "enumerate_subsets",
    "env_fit",
    "equidistant_grid",
    "gen_changepoint_alternative",
    "gen_invariant_gaussian",
    "gen_scm_three_env",
    "gen_sign_flip_example",
    "gen_var_outlier",
    "gen_var_shock",
    "generate",
    "grid_environments",
    "ground_truth_to_dict",
    "hsic_time",
    "json_dumps",
    "lag_scan",
    "least_squares",
    "load_csv",
    "normalize_subset",
    "null_residual_matrix",
    "ols_fit",
    "outcome_to_dict",
    "prune_enabled_search",
    "pvalue_from_null",
    "report_to_dict",
    "resample_null",
    "run_experiment",
    "scaled_residuals",
    "search",
    "smooth_shift",
    "subset_id",
    "t1_coef",
    "t2_var",
    "t3_chow",
    "t4_mean",
    "t5_var",
    "table_to_csv_text",
    "table_to_dict",
    "test_invariance",
    "write_dataset_csv",
    "write_text",
]
