"""Expertise-weighted label aggregation and the two-stage fitting pipeline.

The pipeline estimates how noisy each expert's opinions are from held-out
residuals, converts those estimates into inverse-variance weights, collapses
the opinion matrix into one denoised label per row, and fits a final
regressor on the denoised labels.

A note on what the expertise estimates measure: the validation mean squared
error of an expert's regression converges to the *total* conditional
variance of that expert's opinions around the regression function.  When
the labels themselves are noisy, that total includes the label noise on top
of the expert's own noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AnnotationMatrix,
    FeatureMatrix,
    InvalidDataError,
    InvalidParameterError,
    MultiAnnotatedDataset,
    RngStream,
    SplitSpec,
    split,
)
from .learners import LearnerSpec, fit_learner

__all__ = [
    "ExpertiseProfile",
    "WeightedLabels",
    "WearModel",
    "optimal_weights",
    "floor_expert_mses",
    "estimate_expert_mse",
    "aggregate",
    "fit_wear",
    "predict",
]


def optimal_weights(variances) -> np.ndarray:
    """Weights proportional to inverse variance, normalized to sum to one.

    This is the minimizer of the expected squared error of a convex
    combination of unbiased, independent opinions.  Computed scale-free
    (each variance is divided by the smallest first), so rescaling all
    variances by a power of two leaves the result bit-identical.
    """
    arr = np.asarray(variances, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidParameterError(f"variances must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidParameterError("variances must all be positive and finite")
    inv = arr.min() / arr
    return inv / inv.sum()


def floor_expert_mses(mses) -> np.ndarray:
    """Clamp estimated expert MSEs away from zero before weighting.

    A perfect expert on a finite validation set would otherwise receive an
    infinite weight.  The floor is 1e-12 times the largest estimate, or
    1e-12 absolutely when every estimate is zero (all experts then tie).
    """
    arr = np.asarray(mses, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidParameterError(f"expert MSEs must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidParameterError("expert MSEs must be non-negative and finite")
    top = arr.max()
    floor = 1e-12 * top if top > 0 else 1e-12
    return np.maximum(arr, floor)


@dataclass(frozen=True)
class ExpertiseProfile:
    """Per-expert error estimates, their weights, and the fitted opinion models."""

    expert_mses: np.ndarray
    weights: np.ndarray
    per_expert_models: tuple

    def __post_init__(self):
        mses = np.asarray(self.expert_mses, dtype=float).copy()
        weights = np.asarray(self.weights, dtype=float).copy()
        if mses.shape != weights.shape or mses.ndim != 1:
            raise InvalidDataError("expert MSEs and weights must be vectors of equal length")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidDataError(f"weights must sum to 1, got {weights.sum()!r}")
        if np.any(weights <= 0) or np.any(weights > 1):
            raise InvalidDataError("every weight must lie in (0, 1]")
        order = np.argsort(mses)
        mse_steps = np.diff(mses[order])
        weight_steps = np.diff(weights[order])
        if np.any(weight_steps > 0) or np.any((mse_steps > 0) & (weight_steps >= 0)):
            raise InvalidDataError("weights must strictly decrease as expert MSE increases")
        mses.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "expert_mses", mses)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "per_expert_models", tuple(self.per_expert_models))

    @property
    def n_experts(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class WeightedLabels:
    """One denoised label per row plus the weights that produced it."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        weights = np.asarray(self.weights, dtype=float).copy()
        values.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)


def estimate_expert_mse(model, validation: MultiAnnotatedDataset, expert_index: int) -> float:
    """Mean squared validation residual of one expert's fitted opinion model.

    The model must have been trained without the validation rows; the value
    is a consistent estimate of the expert's total opinion variance.
    """
    if validation.annotations is None:
        raise InvalidDataError("validation dataset carries no annotations")
    if validation.n < 1:
        raise InvalidDataError("validation dataset is empty")
    J = validation.annotations.experts
    if not (0 <= expert_index < J):
        raise InvalidParameterError(f"expert index {expert_index} out of range for {J} experts")
    preds = np.asarray(model.predict(validation.features.values), dtype=float)
    residuals = validation.annotations.values[:, expert_index] - preds
    return float(np.mean(residuals**2))


def aggregate(annotations, weights) -> WeightedLabels:
    """Collapse the opinion matrix into one label per row: the weighted mean.

    Weights must be non-negative and sum to one.  Each output value is
    clipped into its row's [min, max] opinion envelope, which the exact
    convex combination satisfies anyway; clipping only guards against
    floating-point rounding at the boundary.
    """
    values = annotations.values if isinstance(annotations, AnnotationMatrix) else np.asarray(annotations, dtype=float)
    w = np.asarray(weights, dtype=float)
    if values.ndim != 2:
        raise InvalidDataError(f"annotations must be 2-dimensional, got shape {values.shape}")
    if w.ndim != 1 or w.shape[0] != values.shape[1]:
        raise InvalidDataError(
            f"weights length ({w.shape}) does not match expert count ({values.shape[1]})"
        )
    if np.any(w < 0):
        raise InvalidParameterError("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidParameterError(f"weights must sum to 1, got {w.sum()!r}")
    combined = values @ w
    combined = np.clip(combined, values.min(axis=1), values.max(axis=1))
    return WeightedLabels(values=combined, weights=w)


@dataclass(frozen=True)
class WearModel:
    """Expertise profile plus the final regressor fitted on denoised labels."""

    profile: ExpertiseProfile
    final_model: object

    def predict(self, features) -> np.ndarray:
        values = features.values if isinstance(features, FeatureMatrix) else features
        return self.final_model.predict(values)


def fit_wear(
    data: MultiAnnotatedDataset,
    split_spec: SplitSpec,
    expert_learner: LearnerSpec,
    final_learner: LearnerSpec,
    rng: RngStream | None = None,
) -> WearModel:
    """Run the full expertise-weighting pipeline on a multi-annotated dataset.

    Steps: split the rows; fit one opinion model per expert on the training
    partition; score each on the validation partition to estimate expert
    MSEs; turn the (floored) estimates into inverse-variance weights;
    aggregate the training opinions with those weights; and fit the final
    learner on the aggregated labels.  The test partition is never touched.
    """
    if data.annotations is None:
        raise InvalidDataError("dataset carries no annotations; nothing to weight")
    rng = rng if rng is not None else RngStream(0)
    train, validation, _ = split(data, split_spec)

    X_train = train.features.values
    opinions = train.annotations.values
    J = train.annotations.experts

    models = []
    mses = np.empty(J)
    for j in range(J):
        model = fit_learner(expert_learner, X_train, opinions[:, j], rng.child(j))
        models.append(model)
        mses[j] = estimate_expert_mse(model, validation, j)

    floored = floor_expert_mses(mses)
    weights = optimal_weights(floored)
    profile = ExpertiseProfile(expert_mses=floored, weights=weights, per_expert_models=tuple(models))

    denoised = aggregate(train.annotations, weights)
    final = fit_learner(final_learner, X_train, denoised.values, rng.child(J))
    return WearModel(profile=profile, final_model=final)


def predict(model: WearModel, features) -> np.ndarray:
    """Predict with a fitted pipeline model; delegates to the final regressor."""
    return model.predict(features)
