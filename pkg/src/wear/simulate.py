"""Synthetic benchmark generators and the simulated-expert overlay.

Four built-in settings share one coefficient vector over six covariates;
two use a partly quadratic mean function and two a linear one, crossed with
either similar or wildly different expert noise levels.  Expert opinions
are drawn around the realized label, independently per expert.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .core import (
    AnnotationMatrix,
    FeatureMatrix,
    InvalidDataError,
    InvalidParameterError,
    MultiAnnotatedDataset,
    RngStream,
    gaussian_sample,
)

__all__ = [
    "GENERATOR_KINDS",
    "MEAN_COEFFICIENTS",
    "SIMILAR_EXPERT_VARIANCES",
    "DISPARATE_EXPERT_VARIANCES",
    "DEFAULT_NOISE_SD",
    "GeneratorSpec",
    "ExpertOverlaySpec",
    "mean_function",
    "generate",
    "overlay_experts",
    "opinion_variances",
]

GENERATOR_KINDS = ("experiment1", "experiment2", "experiment3", "experiment4", "custom")

MEAN_COEFFICIENTS = (2.0, 1.0, 5.0, 0.5, 4.0, 3.0)
_SQUARED_TERMS = (0, 4, 5)  # covariates squared in the nonlinear settings
SIMILAR_EXPERT_VARIANCES = (4.0, 4.41, 4.84, 5.0625)
DISPARATE_EXPERT_VARIANCES = (4.0, 100.0, 2500.0, 10000.0)
DEFAULT_NOISE_SD = 3.0

_KIND_VARIANCES = {
    "experiment1": SIMILAR_EXPERT_VARIANCES,
    "experiment2": DISPARATE_EXPERT_VARIANCES,
    "experiment3": SIMILAR_EXPERT_VARIANCES,
    "experiment4": DISPARATE_EXPERT_VARIANCES,
}
_KIND_MEAN = {
    "experiment1": "quadratic",
    "experiment2": "quadratic",
    "experiment3": "linear",
    "experiment4": "linear",
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of one synthetic dataset draw.

    Built-in kinds fix the mean function and default the expert variances;
    ``custom`` requires them and additionally takes ``mean_kind``.  The
    covariate distribution defaults to i.i.d. standard normal.
    """

    kind: str
    n: int
    seed: int
    covariate_dim: int = 6
    distribution: str = "normal"
    distribution_params: Mapping[str, float] = field(default_factory=dict)
    noise_sd: float = DEFAULT_NOISE_SD
    expert_variances: tuple[float, ...] | None = None
    mean_kind: str | None = None

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidParameterError(f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be a positive integer, got {self.n!r}")
        if int(self.covariate_dim) != self.covariate_dim or self.covariate_dim < 1:
            raise InvalidParameterError(f"covariate_dim must be a positive integer, got {self.covariate_dim!r}")
        if self.kind != "custom" and self.covariate_dim < 6:
            raise InvalidParameterError(
                f"built-in settings use six mean-function covariates; covariate_dim={self.covariate_dim} is too small"
            )
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0:
            raise InvalidParameterError(f"noise_sd must be non-negative, got {self.noise_sd!r}")
        if self.distribution not in ("normal", "uniform"):
            raise InvalidParameterError(f"unknown covariate distribution {self.distribution!r}")
        object.__setattr__(self, "distribution_params", dict(self.distribution_params))

        variances = self.expert_variances
        if variances is None:
            if self.kind == "custom":
                raise InvalidParameterError("custom generators must state expert_variances")
            variances = _KIND_VARIANCES[self.kind]
        variances = tuple(float(v) for v in variances)
        if len(variances) < 1 or any((not np.isfinite(v)) or v <= 0 for v in variances):
            raise InvalidParameterError("expert_variances must be a non-empty vector of positive reals")
        object.__setattr__(self, "expert_variances", variances)

        mean_kind = self.mean_kind
        if self.kind == "custom":
            mean_kind = "linear" if mean_kind is None else mean_kind
        elif mean_kind is None:
            mean_kind = _KIND_MEAN[self.kind]
        elif mean_kind != _KIND_MEAN[self.kind]:
            raise InvalidParameterError(f"{self.kind} fixes mean_kind={_KIND_MEAN[self.kind]!r}")
        if mean_kind not in ("linear", "quadratic"):
            raise InvalidParameterError(f"unknown mean_kind {mean_kind!r}")
        if mean_kind is not None and self.covariate_dim < 6:
            raise InvalidParameterError("the built-in mean function needs at least six covariates")
        object.__setattr__(self, "mean_kind", mean_kind)

    @property
    def n_experts(self) -> int:
        return len(self.expert_variances)


@dataclass(frozen=True)
class ExpertOverlaySpec:
    """Simulated experts to lay over a dataset that has true labels."""

    expert_variances: tuple[float, ...]
    seed: int

    def __post_init__(self):
        variances = tuple(float(v) for v in self.expert_variances)
        if len(variances) < 1 or any((not np.isfinite(v)) or v <= 0 for v in variances):
            raise InvalidParameterError("expert_variances must be a non-empty vector of positive reals")
        object.__setattr__(self, "expert_variances", variances)

    @property
    def n_experts(self) -> int:
        return len(self.expert_variances)


def mean_function(mean_kind: str, X: np.ndarray) -> np.ndarray:
    """Evaluate the shared six-covariate mean function on a feature matrix."""
    if X.shape[1] < 6:
        raise InvalidDataError("the mean function needs at least six covariates")
    terms = X[:, :6].copy()
    if mean_kind == "quadratic":
        terms[:, list(_SQUARED_TERMS)] = terms[:, list(_SQUARED_TERMS)] ** 2
    elif mean_kind != "linear":
        raise InvalidParameterError(f"unknown mean_kind {mean_kind!r}")
    return terms @ np.asarray(MEAN_COEFFICIENTS)


def _draw_covariates(spec: GeneratorSpec, gen: np.random.Generator) -> np.ndarray:
    shape = (spec.n, spec.covariate_dim)
    params: dict[str, Any] = dict(spec.distribution_params)
    if spec.distribution == "normal":
        return gen.normal(params.get("mean", 0.0), params.get("sd", 1.0), shape)
    if spec.distribution == "uniform":
        return gen.uniform(params.get("low", 0.0), params.get("high", 1.0), shape)
    raise InvalidParameterError(f"unknown covariate distribution {spec.distribution!r}")


def generate(spec: GeneratorSpec) -> MultiAnnotatedDataset:
    """Draw one complete dataset: covariates, true labels, and expert opinions.

    The label is the mean function plus N(0, noise_sd^2) noise; each expert's
    opinion is the realized label plus independent N(0, variance_j) noise.
    """
    root = RngStream(spec.seed)
    X = _draw_covariates(spec, root.child(0).generator())
    labels = mean_function(spec.mean_kind, X) + gaussian_sample(root.child(1), 0.0, spec.noise_sd, spec.n)
    opinions = np.empty((spec.n, spec.n_experts))
    for j, variance in enumerate(spec.expert_variances):
        opinions[:, j] = labels + gaussian_sample(root.child(2 + j), 0.0, float(np.sqrt(variance)), spec.n)
    return MultiAnnotatedDataset(
        features=FeatureMatrix(X),
        annotations=AnnotationMatrix(opinions),
        true_labels=labels,
    )


def overlay_experts(data: MultiAnnotatedDataset, spec: ExpertOverlaySpec) -> MultiAnnotatedDataset:
    """Replace the annotation columns with simulated experts around the true labels."""
    if data.true_labels is None:
        raise InvalidDataError("overlay needs true labels on the dataset")
    root = RngStream(spec.seed)
    n = data.n
    opinions = np.empty((n, spec.n_experts))
    for j, variance in enumerate(spec.expert_variances):
        opinions[:, j] = data.true_labels + gaussian_sample(root.child(j), 0.0, float(np.sqrt(variance)), n)
    return MultiAnnotatedDataset(
        features=data.features,
        annotations=AnnotationMatrix(opinions),
        true_labels=data.true_labels,
    )


def opinion_variances(spec: GeneratorSpec) -> tuple[float, ...]:
    """Total conditional variance of each expert's opinions given the covariates.

    Opinions are drawn around the realized (noisy) label, so their spread
    around the regression function is the label-noise variance plus the
    expert's own variance.  Validation-MSE expertise estimates and the
    joint-likelihood baseline both converge to these totals, which makes
    them the right reference for variance-recovery metrics.
    """
    return tuple(spec.noise_sd**2 + v for v in spec.expert_variances)
