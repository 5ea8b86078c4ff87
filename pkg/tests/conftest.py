import numpy as np
import pytest

from wear import FeatureMatrix, AnnotationMatrix, MultiAnnotatedDataset, RngStream


def make_linear_xy(n, coefs, intercept=0.0, noise_sd=1.0, seed=0, d=None):
    """Random-design linear data used across the learner tests."""
    coefs = np.asarray(coefs, dtype=float)
    d = coefs.shape[0] if d is None else d
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(n, d))
    y = X[:, : coefs.shape[0]] @ coefs + intercept + noise_sd * gen.normal(size=n)
    return X, y


def make_dataset(n=40, n_experts=3, seed=0):
    """Small annotated dataset with known labels, for plumbing tests."""
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(n, 2))
    labels = X @ np.array([1.0, -2.0]) + 0.5
    opinions = labels[:, None] + gen.normal(size=(n, n_experts))
    return MultiAnnotatedDataset(
        features=FeatureMatrix(X),
        annotations=AnnotationMatrix(opinions),
        true_labels=labels,
    )


@pytest.fixture
def rng_stream():
    return RngStream(12345)


@pytest.fixture
def small_dataset():
    return make_dataset()
