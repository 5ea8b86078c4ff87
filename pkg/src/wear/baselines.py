"""Comparison pipelines: arithmetic-mean aggregation, an EM-style joint
linear fit with per-expert noise variances, and the gold standard trained on
the true labels (available only when labels are known)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    InvalidDataError,
    MultiAnnotatedDataset,
    NumericalFailureError,
    RngStream,
    SplitSpec,
    split,
    split_indices,
)
from .learners import LearnerSpec, LinearModel, fit_learner, fit_ols
from .weighting import floor_expert_mses

__all__ = [
    "RaykarState",
    "fit_arithmetic_mean",
    "fit_raykar",
    "fit_gold_standard",
]


def fit_arithmetic_mean(
    data: MultiAnnotatedDataset,
    split_spec: SplitSpec,
    final_learner: LearnerSpec,
    rng: RngStream | None = None,
):
    """Regress the unweighted mean opinion on the features (training rows only)."""
    if data.annotations is None:
        raise InvalidDataError("dataset carries no annotations; nothing to average")
    rng = rng if rng is not None else RngStream(0)
    train, _, _ = split(data, split_spec)
    mean_opinion = train.annotations.values.mean(axis=1)
    return fit_learner(final_learner, train.features.values, mean_opinion, rng.child(0))


def fit_gold_standard(
    data: MultiAnnotatedDataset,
    split_spec: SplitSpec,
    final_learner: LearnerSpec,
    rng: RngStream | None = None,
):
    """Regress the true labels on the features; the in-simulation ceiling."""
    if data.true_labels is None:
        raise InvalidDataError("dataset carries no true labels; gold standard unavailable")
    rng = rng if rng is not None else RngStream(0)
    train, _, _ = split(data, split_spec)
    return fit_learner(final_learner, train.features.values, train.true_labels, rng.child(0))


@dataclass(frozen=True)
class RaykarState:
    """Converged state of the EM-style joint linear/noise-variance fit."""

    coefficients: np.ndarray
    intercept: float
    precisions: np.ndarray
    log_likelihood: float
    iterations: int

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float).copy()
        precisions = np.asarray(self.precisions, dtype=float).copy()
        coefs.flags.writeable = False
        precisions.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "precisions", precisions)

    @property
    def estimated_variances(self) -> np.ndarray:
        return 1.0 / self.precisions

    def linear_model(self) -> LinearModel:
        return LinearModel(coefficients=self.coefficients, intercept=self.intercept)

    def predict(self, features) -> np.ndarray:
        return self.linear_model().predict(features)


def _gaussian_log_likelihood(opinions: np.ndarray, mu: np.ndarray, variances: np.ndarray) -> float:
    n = opinions.shape[0]
    resid_sq = (opinions - mu[:, None]) ** 2
    return float(
        -0.5 * n * np.sum(np.log(2.0 * np.pi * variances))
        - 0.5 * np.sum(resid_sq / variances)
    )


def fit_raykar(
    data: MultiAnnotatedDataset,
    split_spec: SplitSpec,
    max_iters: int = 500,
    tol: float = 1e-8,
) -> RaykarState:
    """Alternating maximization of the joint Gaussian opinion likelihood.

    Model: opinion j on row i is normal around the shared linear predictor
    with expert-specific precision.  Given precisions, the coefficients are
    the least-squares fit to the precision-weighted mean opinion; given
    coefficients, each expert's variance is its mean squared residual.  Both
    updates are exact maximizations, so the log-likelihood never decreases.

    Needs no held-out rows, so it trains on train+validation combined and
    leaves the test partition untouched.
    """
    if data.annotations is None:
        raise InvalidDataError("dataset carries no annotations")
    train_idx, val_idx, _ = split_indices(data.n, split_spec)
    fit_rows = np.sort(np.concatenate([train_idx, val_idx]))
    subset = data.take(fit_rows)

    X = subset.features.values
    opinions = subset.annotations.values
    n, J = opinions.shape

    mean_opinion = opinions.mean(axis=1)
    base = fit_ols(X, mean_opinion)
    base_mu = base.predict(X)
    base_mse = float(np.mean((mean_opinion - base_mu) ** 2))
    variances = floor_expert_mses(
        np.mean((opinions - mean_opinion[:, None]) ** 2, axis=0) + base_mse
    )
    model = base

    log_likelihood = -np.inf
    trace: list[float] = []
    iterations = 0
    for iterations in range(1, max_iters + 1):
        precisions = 1.0 / variances
        pseudo_target = (opinions @ precisions) / precisions.sum()
        model = fit_ols(X, pseudo_target)
        mu = model.predict(X)
        variances = floor_expert_mses(np.mean((opinions - mu[:, None]) ** 2, axis=0))
        new_ll = _gaussian_log_likelihood(opinions, mu, variances)
        trace.append(new_ll)
        if not np.isfinite(new_ll):
            raise NumericalFailureError(
                f"log-likelihood became non-finite at iteration {iterations}", trace=tuple(trace)
            )
        if new_ll + 1e-9 * max(1.0, abs(new_ll)) < log_likelihood:
            raise NumericalFailureError(
                f"log-likelihood decreased at iteration {iterations}: {log_likelihood} -> {new_ll}",
                trace=tuple(trace),
            )
        if np.isfinite(log_likelihood) and abs(new_ll - log_likelihood) < tol * max(1.0, abs(log_likelihood)):
            log_likelihood = new_ll
            break
        log_likelihood = new_ll

    return RaykarState(
        coefficients=model.coefficients,
        intercept=model.intercept,
        precisions=1.0 / variances,
        log_likelihood=log_likelihood,
        iterations=iterations,
    )
