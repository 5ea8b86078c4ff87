"""Expertise-weighted label aggregation for regression with noisy expert labels.

The library estimates how reliable each annotator is from held-out
residuals, collapses the annotator opinions into one denoised label per row
by inverse-variance weighting, and fits a downstream regressor on the
result.  It ships comparison pipelines (arithmetic-mean aggregation, a
joint-likelihood linear baseline, and a gold standard trained on true
labels), synthetic benchmark generators, CSV ingestion with a simulated
expert overlay, replication metrics, and a CLI harness that reproduces the
full comparison tables.
"""

from .core import (
    AnnotationMatrix,
    FeatureMatrix,
    InvalidDataError,
    InvalidParameterError,
    InvalidSplitError,
    MultiAnnotatedDataset,
    NumericalFailureError,
    RngStream,
    SingularDesignError,
    SplitSpec,
    WearError,
    gaussian_sample,
    split,
    split_indices,
)
from .learners import (
    LEARNER_KINDS,
    ForestModel,
    LassoPath,
    LearnerSpec,
    LinearModel,
    TreeModel,
    cross_validated_mse,
    fit_forest,
    fit_lasso,
    fit_learner,
    fit_ols,
    fit_tree,
    lasso_kkt_gap,
    lasso_lambda_max,
    solve_lasso,
)
from .weighting import (
    ExpertiseProfile,
    WearModel,
    WeightedLabels,
    aggregate,
    estimate_expert_mse,
    fit_wear,
    floor_expert_mses,
    optimal_weights,
    predict,
)
from .baselines import RaykarState, fit_arithmetic_mean, fit_gold_standard, fit_raykar
from .simulate import (
    DEFAULT_NOISE_SD,
    DISPARATE_EXPERT_VARIANCES,
    GENERATOR_KINDS,
    MEAN_COEFFICIENTS,
    SIMILAR_EXPERT_VARIANCES,
    ExpertOverlaySpec,
    GeneratorSpec,
    generate,
    mean_function,
    opinion_variances,
    overlay_experts,
)
from .ingest import CsvSchema, load_csv
from .evaluate import (
    FRAMEWORK_ORDER,
    LEARNER_ORDER,
    AggregateReport,
    GroupSummary,
    ReplicationReport,
    aggregate_reports,
    test_mse,
    variance_deviation,
)
from .cli import ConfigError, ExperimentConfig, run, validate_config

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "AnnotationMatrix",
    "ConfigError",
    "CsvSchema",
    "DEFAULT_NOISE_SD",
    "DISPARATE_EXPERT_VARIANCES",
    "ExperimentConfig",
    "ExpertOverlaySpec",
    "ExpertiseProfile",
    "FRAMEWORK_ORDER",
    "FeatureMatrix",
    "ForestModel",
    "GENERATOR_KINDS",
    "GeneratorSpec",
    "GroupSummary",
    "InvalidDataError",
    "InvalidParameterError",
    "InvalidSplitError",
    "LEARNER_KINDS",
    "LEARNER_ORDER",
    "LassoPath",
    "LearnerSpec",
    "LinearModel",
    "MEAN_COEFFICIENTS",
    "MultiAnnotatedDataset",
    "NumericalFailureError",
    "RaykarState",
    "ReplicationReport",
    "RngStream",
    "SIMILAR_EXPERT_VARIANCES",
    "SingularDesignError",
    "SplitSpec",
    "TreeModel",
    "WearError",
    "WearModel",
    "WeightedLabels",
    "aggregate",
    "aggregate_reports",
    "cross_validated_mse",
    "estimate_expert_mse",
    "fit_arithmetic_mean",
    "fit_forest",
    "fit_gold_standard",
    "fit_lasso",
    "fit_learner",
    "fit_ols",
    "fit_raykar",
    "fit_tree",
    "fit_wear",
    "floor_expert_mses",
    "gaussian_sample",
    "generate",
    "lasso_kkt_gap",
    "lasso_lambda_max",
    "load_csv",
    "mean_function",
    "opinion_variances",
    "optimal_weights",
    "overlay_experts",
    "predict",
    "run",
    "solve_lasso",
    "split",
    "split_indices",
    "test_mse",
    "validate_config",
    "variance_deviation",
    "__version__",
]
