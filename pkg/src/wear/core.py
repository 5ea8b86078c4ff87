"""Validated numeric containers, dataset splitting, and splittable rng streams.

Everything here is immutable after construction: the wrapped numpy arrays are
marked read-only so datasets and streams can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "WearError",
    "InvalidDataError",
    "InvalidParameterError",
    "InvalidSplitError",
    "SingularDesignError",
    "NumericalFailureError",
    "FeatureMatrix",
    "AnnotationMatrix",
    "MultiAnnotatedDataset",
    "SplitSpec",
    "RngStream",
    "split",
    "split_indices",
    "gaussian_sample",
]


class WearError(Exception):
    """Base class for errors raised by this package."""


class InvalidDataError(WearError):
    """Input data violates a structural or numeric precondition."""


class InvalidParameterError(WearError):
    """A parameter lies outside its documented domain."""


class InvalidSplitError(WearError):
    """A requested split would leave some partition empty."""


class SingularDesignError(WearError):
    """The regression design matrix is numerically rank deficient."""

    def __init__(self, message: str, collinear_columns: tuple[int, ...] = ()):
        super().__init__(message)
        self.collinear_columns = tuple(int(c) for c in collinear_columns)


class NumericalFailureError(WearError):
    """An iterative fit diverged or produced non-finite values."""

    def __init__(self, message: str, trace: tuple = ()):
        super().__init__(message)
        self.trace = tuple(trace)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=float)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


def _check_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise InvalidDataError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidDataError(f"{name} must have at least one row and one column, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError(f"{name} contains NaN or infinite entries")
    return _readonly(arr)


def _check_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidDataError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError(f"{name} contains NaN or infinite entries")
    return _readonly(arr)


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major matrix of covariates, one row per observation."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_matrix(self.values, "feature matrix"))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class AnnotationMatrix:
    """Matrix of expert opinions: one row per observation, one column per expert."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_matrix(self.values, "annotation matrix"))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def experts(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MultiAnnotatedDataset:
    """Covariates plus per-expert opinion columns and, when known, true labels.

    ``annotations`` may be None for raw tabular data that has not yet been
    annotated (e.g. a freshly loaded CSV before simulated experts are added).
    """

    features: FeatureMatrix
    annotations: AnnotationMatrix | None = None
    true_labels: np.ndarray | None = None

    def __post_init__(self):
        n = self.features.rows
        if self.annotations is not None and self.annotations.rows != n:
            raise InvalidDataError(
                f"annotation rows ({self.annotations.rows}) differ from feature rows ({n})"
            )
        if self.true_labels is not None:
            labels = _check_vector(self.true_labels, "true labels")
            if labels.shape[0] != n:
                raise InvalidDataError(f"true labels length ({labels.shape[0]}) differs from feature rows ({n})")
            object.__setattr__(self, "true_labels", labels)

    @property
    def n(self) -> int:
        return self.features.rows

    @property
    def n_experts(self) -> int:
        return 0 if self.annotations is None else self.annotations.experts

    def take(self, indices: np.ndarray) -> "MultiAnnotatedDataset":
        """Row-subset the dataset, keeping every aligned component."""
        idx = np.asarray(indices, dtype=int)
        return MultiAnnotatedDataset(
            features=FeatureMatrix(self.features.values[idx]),
            annotations=None if self.annotations is None else AnnotationMatrix(self.annotations.values[idx]),
            true_labels=None if self.true_labels is None else self.true_labels[idx],
        )


@dataclass(frozen=True)
class SplitSpec:
    """Fractions and permutation seed for a train/validation/test split."""

    train_fraction: float
    validation_fraction: float
    test_fraction: float
    seed: int

    def __post_init__(self):
        for name in ("train_fraction", "validation_fraction", "test_fraction"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {value}")
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise InvalidParameterError(f"split fractions must sum to 1, got {total!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameterError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class RngStream:
    """Splittable source of deterministic pseudo-randomness.

    Identical (seed, stream_id, subpath) always produce an identical draw
    sequence; distinct stream ids or subpaths produce statistically
    independent streams.  A stream is a value: deriving children never
    mutates shared state, so replications can run in any order or in
    parallel without changing results.
    """

    seed: int
    stream_id: int = 0
    subpath: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameterError(f"seed must be a non-negative integer, got {self.seed!r}")
        if int(self.stream_id) != self.stream_id or self.stream_id < 0:
            raise InvalidParameterError(f"stream_id must be a non-negative integer, got {self.stream_id!r}")

    def child(self, *tags: int) -> "RngStream":
        """Derive an independent stream for a sub-purpose."""
        return replace(self, subpath=self.subpath + tuple(int(t) for t in tags))

    def generator(self) -> np.random.Generator:
        """Fresh numpy generator positioned at the start of this stream."""
        key = (int(self.stream_id),) + tuple(int(t) for t in self.subpath)
        return np.random.default_rng(np.random.SeedSequence(int(self.seed), spawn_key=key))

    def draw_seed(self) -> int:
        """One 63-bit integer, e.g. to seed a SplitSpec deterministically."""
        return int(self.generator().integers(0, 2**63 - 1))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partition row indices 0..n-1 into train/validation/test index arrays.

    Validation and test sizes are floor(fraction * n); leftover rows from
    rounding go to train.  Membership comes from a uniform permutation under
    spec.seed; each returned array is sorted so partitions preserve the
    original row order.
    """
    if n < 1:
        raise InvalidSplitError(f"cannot split an empty dataset (n={n})")
    n_val = int(np.floor(spec.validation_fraction * n))
    n_test = int(np.floor(spec.test_fraction * n))
    n_train = n - n_val - n_test
    if n_train < 1 or n_val < 1 or n_test < 1:
        raise InvalidSplitError(
            f"split of n={n} with fractions ({spec.train_fraction}, {spec.validation_fraction}, "
            f"{spec.test_fraction}) leaves an empty partition (sizes {n_train}, {n_val}, {n_test})"
        )
    perm = RngStream(spec.seed).generator().permutation(n)
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train:n_train + n_val])
    test = np.sort(perm[n_train + n_val:])
    return train, val, test


def split(
    data: MultiAnnotatedDataset, spec: SplitSpec
) -> tuple[MultiAnnotatedDataset, MultiAnnotatedDataset, MultiAnnotatedDataset]:
    """Split a dataset into disjoint train/validation/test datasets."""
    train_idx, val_idx, test_idx = split_indices(data.n, spec)
    return data.take(train_idx), data.take(val_idx), data.take(test_idx)


def gaussian_sample(stream: RngStream, mean: float, sd: float, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. normal values with the given mean and sd."""
    if not np.isfinite(mean) or not np.isfinite(sd):
        raise InvalidParameterError("mean and sd must be finite")
    if sd < 0:
        raise InvalidParameterError(f"standard deviation must be non-negative, got {sd}")
    if int(count) != count or count < 0:
        raise InvalidParameterError(f"count must be a non-negative integer, got {count!r}")
    return stream.generator().normal(mean, sd, int(count))
