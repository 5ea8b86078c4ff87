"""Regression learners behind a single fit/predict contract.

Four families are provided: ordinary least squares, lasso with a
cross-validated penalty path, CART regression trees, and bagged random
forests.  All fits are deterministic given the data, hyperparameters, and
an :class:`~wear.core.RngStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import scipy.linalg

from .core import (
    InvalidDataError,
    InvalidParameterError,
    NumericalFailureError,
    RngStream,
    SingularDesignError,
)

__all__ = [
    "LEARNER_KINDS",
    "LearnerSpec",
    "LinearModel",
    "LassoPath",
    "TreeModel",
    "ForestModel",
    "fit_ols",
    "solve_lasso",
    "fit_lasso",
    "lasso_lambda_max",
    "lasso_kkt_gap",
    "fit_tree",
    "fit_forest",
    "fit_learner",
    "cross_validated_mse",
]

LEARNER_KINDS = ("linear", "lasso", "tree", "forest")

_LEARNER_DEFAULTS: dict[str, dict[str, Any]] = {
    "linear": {},
    "lasso": {"folds": 10, "lambda_grid_size": 100},
    "tree": {"min_split": 20, "min_leaf": 7, "complexity": 0.01, "max_depth": 30},
    "forest": {"n_trees": 500, "mtry": "auto", "min_leaf": 5, "bootstrap": True},
}


@dataclass(frozen=True)
class LearnerSpec:
    """Names a learner family plus any hyperparameter overrides."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise InvalidParameterError(f"unknown learner kind {self.kind!r}; expected one of {LEARNER_KINDS}")
        allowed = _LEARNER_DEFAULTS[self.kind]
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise InvalidParameterError(f"unknown {self.kind} hyperparameters: {', '.join(unknown)}")
        object.__setattr__(self, "params", dict(self.params))

    def resolved_params(self) -> dict[str, Any]:
        """Defaults merged with overrides; 'auto' values stay symbolic."""
        merged = dict(_LEARNER_DEFAULTS[self.kind])
        merged.update(self.params)
        return merged

    def label(self) -> str:
        """Canonical short name used in reports; only non-default params appear."""
        defaults = _LEARNER_DEFAULTS[self.kind]
        overrides = {k: v for k, v in self.params.items() if v != defaults[k]}
        if not overrides:
            return self.kind
        inner = ",".join(f"{k}={overrides[k]}" for k in sorted(overrides))
        return f"{self.kind}({inner})"


def _as_features(features) -> np.ndarray:
    values = getattr(features, "values", features)
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise InvalidDataError(f"features must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError("features contain NaN or infinite entries")
    return arr


def _as_xy(features, targets) -> tuple[np.ndarray, np.ndarray]:
    X = _as_features(features)
    y = np.asarray(targets, dtype=float)
    if y.ndim != 1:
        raise InvalidDataError(f"targets must be 1-dimensional, got shape {y.shape}")
    if y.shape[0] != X.shape[0]:
        raise InvalidDataError(f"targets length ({y.shape[0]}) differs from feature rows ({X.shape[0]})")
    if not np.all(np.isfinite(y)):
        raise InvalidDataError("targets contain NaN or infinite entries")
    return X, y


# ---------------------------------------------------------------------------
# linear models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearModel:
    """Affine predictor: intercept + features @ coefficients."""

    coefficients: np.ndarray
    intercept: float

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float).reshape(-1).copy()
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "intercept", float(self.intercept))

    def predict(self, features) -> np.ndarray:
        X = _as_features(features)
        if X.shape[1] != self.coefficients.shape[0]:
            raise InvalidDataError(
                f"model expects {self.coefficients.shape[0]} features, got {X.shape[1]}"
            )
        return X @ self.coefficients + self.intercept


def fit_ols(features, targets) -> LinearModel:
    """Least-squares fit with an intercept, solved by pivoted QR.

    Raises :class:`SingularDesignError` naming the collinear design columns
    when the intercept-augmented design is numerically rank deficient.
    """
    X, y = _as_xy(features, targets)
    n, d = X.shape
    if n <= d + 1:
        raise InvalidDataError(f"least squares needs n > d + 1 rows, got n={n}, d={d}")
    design = np.column_stack([np.ones(n), X])
    q, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(n, d + 1) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    if rank < d + 1:
        dropped = [int(p) for p in piv[rank:]]
        names = ["intercept" if p == 0 else f"feature {p - 1}" for p in dropped]
        raise SingularDesignError(
            "design matrix is rank deficient; collinear columns: " + ", ".join(names),
            collinear_columns=tuple(dropped),
        )
    beta_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty(d + 1)
    beta[piv] = beta_piv
    return LinearModel(coefficients=beta[1:], intercept=float(beta[0]))


# ---------------------------------------------------------------------------
# lasso
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoPath:
    """Penalty grid with per-value cross-validation errors and the winner."""

    lambda_grid: np.ndarray
    cv_errors: np.ndarray
    chosen_lambda: float

    def __post_init__(self):
        grid = np.asarray(self.lambda_grid, dtype=float).copy()
        errors = np.asarray(self.cv_errors, dtype=float).copy()
        grid.flags.writeable = False
        errors.flags.writeable = False
        object.__setattr__(self, "lambda_grid", grid)
        object.__setattr__(self, "cv_errors", errors)


def _standardize(X: np.ndarray, y: np.ndarray):
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    usable = sigma > 0
    safe_sigma = np.where(usable, sigma, 1.0)
    Xs = (X - mu) / safe_sigma
    Xs[:, ~usable] = 0.0
    ybar = y.mean()
    return Xs, y - ybar, mu, safe_sigma, usable, ybar


def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def _coordinate_descent(
    gram: np.ndarray,
    corr: np.ndarray,
    lam: float,
    beta: np.ndarray,
    usable: np.ndarray,
    tol: float = 1e-7,
    max_sweeps: int = 100_000,
    objective_trace: list[float] | None = None,
    yty_over_n: float | None = None,
) -> np.ndarray:
    """Cyclic coordinate descent on (1/2n)||y - Xb||^2 + lam*||b||_1.

    gram = X'X/n and corr = X'y/n for standardized columns, so each
    coordinate update is an exact one-dimensional minimization.
    """
    beta = beta.copy()
    d = beta.shape[0]
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            if not usable[j]:
                continue
            old = beta[j]
            partial = corr[j] - gram[j] @ beta + gram[j, j] * old
            new = _soft_threshold(partial, lam) / gram[j, j]
            if new != old:
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if objective_trace is not None and yty_over_n is not None:
            value = 0.5 * (yty_over_n - 2.0 * corr @ beta + beta @ gram @ beta) + lam * np.abs(beta).sum()
            objective_trace.append(float(value))
        if max_delta < tol:
            break
    else:
        raise NumericalFailureError("lasso coordinate descent failed to converge")
    return beta


def lasso_lambda_max(features, targets) -> float:
    """Smallest penalty at which every lasso slope is exactly zero.

    Computed with the same elementwise arithmetic the solver uses for its
    gradients, so the zero-slope guarantee holds bit-exactly at this value.
    """
    X, y = _as_xy(features, targets)
    Xs, yc, _, _, usable, _ = _standardize(X, y)
    if not usable.any():
        return 0.0
    corr = (Xs.T @ yc) / X.shape[0]
    return float(np.max(np.abs(corr[usable])))


def solve_lasso(features, targets, lam: float, tol: float = 1e-7,
                objective_trace: list[float] | None = None) -> LinearModel:
    """Solve the lasso at one fixed penalty, reporting original-scale coefficients."""
    X, y = _as_xy(features, targets)
    if lam < 0:
        raise InvalidParameterError(f"penalty must be non-negative, got {lam}")
    n, d = X.shape
    Xs, yc, mu, sigma, usable, ybar = _standardize(X, y)
    gram = (Xs.T @ Xs) / n
    corr = (Xs.T @ yc) / n
    beta = _coordinate_descent(
        gram, corr, lam, np.zeros(d), usable, tol=tol,
        objective_trace=objective_trace, yty_over_n=float(yc @ yc) / n,
    )
    coefs = beta / sigma
    intercept = ybar - float(coefs @ mu)
    return LinearModel(coefficients=coefs, intercept=intercept)


def lasso_kkt_gap(features, targets, model: LinearModel, lam: float) -> float:
    """Largest violation of the lasso stationarity conditions at a solution.

    Zero (up to solver tolerance) certifies optimality: active coordinates
    must have gradient exactly +/- lam and inactive ones gradient within
    [-lam, lam].
    """
    X, y = _as_xy(features, targets)
    n = X.shape[0]
    Xs, yc, _, sigma, usable, _ = _standardize(X, y)
    beta = model.coefficients * sigma
    grad = (Xs.T @ (yc - Xs @ beta)) / n
    gap = 0.0
    for j in range(X.shape[1]):
        if not usable[j]:
            continue
        if beta[j] > 0:
            gap = max(gap, abs(grad[j] - lam))
        elif beta[j] < 0:
            gap = max(gap, abs(grad[j] + lam))
        else:
            gap = max(gap, max(0.0, abs(grad[j]) - lam))
    return gap


def fit_lasso(features, targets, folds: int = 10, lambda_grid_size: int = 100,
              rng: RngStream | None = None) -> tuple[LinearModel, LassoPath]:
    """Lasso with K-fold cross-validation over a log-spaced penalty path.

    The grid runs from the data's lambda_max down to 1e-4 * lambda_max; the
    returned model is refit on all rows at the CV-minimizing penalty (ties
    resolved toward the larger, sparser penalty).
    """
    X, y = _as_xy(features, targets)
    n, d = X.shape
    if folds < 2:
        raise InvalidParameterError(f"cross-validation needs at least 2 folds, got {folds}")
    if folds > n:
        raise InvalidParameterError(f"more folds ({folds}) than rows ({n})")
    if lambda_grid_size < 1:
        raise InvalidParameterError(f"lambda grid size must be positive, got {lambda_grid_size}")
    rng = rng if rng is not None else RngStream(0)

    lam_max = lasso_lambda_max(X, y)
    if lam_max <= 0:
        # Targets carry no linear signal; every penalty yields the null model.
        grid = np.zeros(1)
        model = solve_lasso(X, y, 0.0)
        return model, LassoPath(grid, np.array([float(np.var(y))]), 0.0)
    grid = np.geomspace(lam_max, 1e-4 * lam_max, lambda_grid_size)

    perm = rng.generator().permutation(n)
    fold_slices = np.array_split(perm, folds)
    fold_errors = np.empty((folds, grid.shape[0]))
    for k, held_out in enumerate(fold_slices):
        mask = np.ones(n, dtype=bool)
        mask[held_out] = False
        Xt, yt = X[mask], y[mask]
        Xs, yc, mu, sigma, usable, ybar = _standardize(Xt, yt)
        m = Xt.shape[0]
        gram = (Xs.T @ Xs) / m
        corr = (Xs.T @ yc) / m
        beta = np.zeros(d)
        for g, lam in enumerate(grid):
            beta = _coordinate_descent(gram, corr, lam, beta, usable)
            coefs = beta / sigma
            intercept = ybar - float(coefs @ mu)
            preds = X[held_out] @ coefs + intercept
            fold_errors[k, g] = float(np.mean((y[held_out] - preds) ** 2))
    cv_errors = fold_errors.mean(axis=0)
    best = int(np.argmin(cv_errors))  # first index on the decreasing grid = largest lambda
    chosen = float(grid[best])

    Xs, yc, mu, sigma, usable, ybar = _standardize(X, y)
    gram = (Xs.T @ Xs) / n
    corr = (Xs.T @ yc) / n
    beta = np.zeros(d)
    for lam in grid[: best + 1]:  # warm starts down the path
        beta = _coordinate_descent(gram, corr, lam, beta, usable)
    coefs = beta / sigma
    model = LinearModel(coefficients=coefs, intercept=ybar - float(coefs @ mu))
    return model, LassoPath(grid, cv_errors, chosen)


# ---------------------------------------------------------------------------
# CART trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeModel:
    """CART regression tree stored as flat node arrays.

    feature[i] is -1 for leaves; internal nodes route rows with
    x[feature] <= threshold to children_left and the rest to children_right.
    value[i] is the mean training target of the rows reaching node i.
    """

    feature: np.ndarray
    threshold: np.ndarray
    children_left: np.ndarray
    children_right: np.ndarray
    value: np.ndarray
    n_features: int

    def __post_init__(self):
        for name in ("feature", "threshold", "children_left", "children_right", "value"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.children_left[i]] = depths[i] + 1
                depths[self.children_right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def apply(self, features) -> np.ndarray:
        """Leaf index for every row."""
        X = _as_features(features)
        if X.shape[1] != self.n_features:
            raise InvalidDataError(f"model expects {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            live = feat >= 0
            if not live.any():
                return node
            rows = np.flatnonzero(live)
            x = X[rows, feat[rows]]
            go_left = x <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.children_left[node[rows]], self.children_right[node[rows]])

    def predict(self, features) -> np.ndarray:
        return self.value[self.apply(features)]


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    min_split: int,
    min_leaf: int,
    complexity: float,
    max_depth: int,
    mtry: int,
    gen: np.random.Generator | None,
) -> TreeModel:
    """Breadth-first CART growth over presorted per-feature row orders.

    Rows are argsorted once per feature; afterwards every level scans all
    features in one 2-D block and repartitions the sorted orders in place,
    so no further sorting happens while the tree grows.
    """
    n, d = X.shape
    total = float(y.sum())
    total_sq = float((y * y).sum())
    sse_root = max(total_sq - total * total / n, 0.0)
    scale = total_sq / n + 1.0
    purity_floor = 1e-12 * scale  # below this per-row SSE a node counts as pure
    gain_floor = max(complexity * sse_root, 1e-14 * scale)

    feature: list[int] = [-1]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    value: list[float] = [total / n]

    # orders[f] holds row ids grouped by node and value-sorted within a node;
    # the node layout (offsets/counts) is shared by every feature.
    orders = np.argsort(X, axis=0, kind="stable").T.copy()
    node_ids = np.array([0], dtype=np.int64)
    counts = np.array([n], dtype=np.int64)
    sums = np.array([total])
    sqs = np.array([total_sq])
    depth = 0
    f_index = np.arange(d)[:, None]

    while counts.size and depth < max_depth:
        m = counts.shape[0]
        n_act = int(counts.sum())
        sse = np.maximum(sqs - sums * sums / counts, 0.0)
        splittable = (counts >= min_split) & (sse > purity_floor * counts)
        if not splittable.any():
            break

        if mtry < d and gen is not None:
            # one uniform draw per (node, feature); the mtry smallest win
            ticket = gen.random((m, d))
            chosen = np.argpartition(ticket, mtry - 1, axis=1)[:, :mtry]
            allowed = np.zeros((m, d), dtype=bool)
            np.put_along_axis(allowed, chosen, True, axis=1)
            allowed[~splittable] = False
        else:
            allowed = np.ones((m, d), dtype=bool)

        offsets = np.concatenate([[0], np.cumsum(counts)])
        starts = offsets[:-1]
        g_of_pos = np.repeat(np.arange(m), counts)
        group_start = starts[g_of_pos]
        local = np.arange(n_act) - group_start

        Y2 = y[orders]                      # (d, n_act), per-feature sorted order
        Xv = X[orders, f_index]             # matching feature values
        c1 = np.cumsum(Y2, axis=1)
        c2 = np.cumsum(Y2 * Y2, axis=1)
        shifted = group_start - 1
        base1 = np.where(group_start > 0, c1[:, shifted], 0.0)
        base2 = np.where(group_start > 0, c2[:, shifted], 0.0)

        left_n = local + 1.0
        right_n = counts[g_of_pos] - left_n
        left_sum = c1 - base1
        left_sq = c2 - base2
        right_sum = sums[g_of_pos] - left_sum
        right_sq = sqs[g_of_pos] - left_sq
        with np.errstate(divide="ignore", invalid="ignore"):
            child_sse = (
                left_sq - left_sum * left_sum / left_n
                + right_sq - right_sum * right_sum / np.maximum(right_n, 1.0)
            )
        gains = sse[g_of_pos] - child_sse

        boundary = np.zeros((d, n_act), dtype=bool)
        boundary[:, :-1] = Xv[:, :-1] < Xv[:, 1:]
        valid = (
            boundary
            & (right_n > 0)
            & (left_n >= min_leaf)
            & (right_n >= min_leaf)
            & allowed.T[:, g_of_pos]
        )
        gains = np.where(valid, gains, -np.inf)

        group_max = np.maximum.reduceat(gains, starts, axis=1)        # (d, m)
        hit = (gains == group_max[:, g_of_pos]) & (gains > -np.inf)
        pos_or_sentinel = np.where(hit, np.arange(n_act), n_act)
        first_pos = np.minimum.reduceat(pos_or_sentinel, starts, axis=1)  # (d, m)

        best_gain = group_max.max(axis=0)
        best_feature = group_max.argmax(axis=0)  # first max: lowest feature wins ties
        chosen_pos = first_pos[best_feature, np.arange(m)]
        do_split = splittable & (best_gain >= gain_floor) & (chosen_pos < n_act)
        if not do_split.any():
            break

        split_groups = np.flatnonzero(do_split)
        bf = best_feature[split_groups]
        cp = chosen_pos[split_groups]
        thresholds = 0.5 * (Xv[bf, cp] + Xv[bf, cp + 1])

        # allocate child ids: splitting groups in ascending node order get
        # consecutive (left, right) pairs
        n_splitting = split_groups.shape[0]
        first_child = len(feature)
        for k, g in enumerate(split_groups):
            nid = int(node_ids[g])
            feature[nid] = int(bf[k])
            threshold[nid] = float(thresholds[k])
            left[nid] = first_child + 2 * k
            right[nid] = first_child + 2 * k + 1

        # route rows: go_left per original row id, for rows in splitting nodes
        row_go_left = np.zeros(n, dtype=bool)
        split_rank = np.full(m, -1, dtype=np.int64)
        split_rank[split_groups] = np.arange(n_splitting)
        pos_keep = do_split[g_of_pos]                      # same layout for every feature
        base_rows = orders[0]
        kept_rows = base_rows[pos_keep]
        g_kept = g_of_pos[pos_keep]
        full_bf = np.zeros(m, dtype=np.int64)
        full_thr = np.zeros(m)
        full_bf[split_groups] = bf
        full_thr[split_groups] = thresholds
        row_go_left[kept_rows] = X[kept_rows, full_bf[g_kept]] <= full_thr[g_kept]

        # children bookkeeping (left child first, in splitting-group order)
        left_flags0 = row_go_left[base_rows] & pos_keep
        left_counts = np.add.reduceat(left_flags0.astype(np.int64), starts)[split_groups]
        right_counts = counts[split_groups] - left_counts
        left_sums_g = np.add.reduceat(np.where(left_flags0, Y2[0], 0.0), starts)[split_groups]
        left_sqs_g = np.add.reduceat(np.where(left_flags0, Y2[0] * Y2[0], 0.0), starts)[split_groups]
        right_sums_g = sums[split_groups] - left_sums_g
        right_sqs_g = sqs[split_groups] - left_sqs_g

        new_counts = np.empty(2 * n_splitting, dtype=np.int64)
        new_counts[0::2] = left_counts
        new_counts[1::2] = right_counts
        new_sums = np.empty(2 * n_splitting)
        new_sums[0::2] = left_sums_g
        new_sums[1::2] = right_sums_g
        new_sqs = np.empty(2 * n_splitting)
        new_sqs[0::2] = left_sqs_g
        new_sqs[1::2] = right_sqs_g
        if np.any(new_counts == 0):  # pragma: no cover - split validity guarantees both sides
            raise NumericalFailureError("tree split produced an empty child")

        feature.extend([-1] * (2 * n_splitting))
        threshold.extend([0.0] * (2 * n_splitting))
        left.extend([-1] * (2 * n_splitting))
        right.extend([-1] * (2 * n_splitting))
        value.extend((new_sums / new_counts).tolist())

        # repartition every feature's order without sorting: rows keep their
        # within-node value order when stably split into left/right blocks
        new_offsets = np.concatenate([[0], np.cumsum(new_counts)])
        go2 = row_go_left[orders]                          # (d, n_act)
        lcum = np.cumsum(go2 & pos_keep, axis=1)
        lbase = np.where(group_start > 0, lcum[:, shifted], 0)
        lrank = lcum - lbase                               # inclusive left count within group
        kcum = np.cumsum(pos_keep)
        kbase = np.where(group_start > 0, kcum[shifted], 0)
        krank = kcum - kbase                               # inclusive kept count within group
        rrank = krank - lrank

        child_slot = 2 * split_rank[g_of_pos]              # -2 for non-splitting (masked)
        dest = np.where(
            go2,
            new_offsets[np.maximum(child_slot, 0)] + lrank - 1,
            new_offsets[np.maximum(child_slot + 1, 0)] + rrank - 1,
        )
        next_n = int(new_counts.sum())
        new_orders = np.empty((d, next_n), dtype=orders.dtype)
        for f in range(d):
            new_orders[f, dest[f][pos_keep]] = orders[f][pos_keep]

        orders = new_orders
        node_ids = np.arange(first_child, first_child + 2 * n_splitting, dtype=np.int64)
        counts = new_counts
        sums = new_sums
        sqs = new_sqs
        depth += 1

    return TreeModel(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        children_left=np.asarray(left, dtype=np.int64),
        children_right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
        n_features=d,
    )


def fit_tree(features, targets, min_split: int = 20, min_leaf: int = 7,
             complexity: float = 0.01, max_depth: int = 30) -> TreeModel:
    """Grow a CART regression tree by greedy variance-reduction splits.

    A split is kept only when it lowers total squared error by at least
    ``complexity`` times the root squared error.  Ties break toward the
    lowest feature index, then the smallest threshold; thresholds sit at
    midpoints of consecutive distinct sorted values.
    """
    X, y = _as_xy(features, targets)
    if min_leaf < 1 or min_split < 2:
        raise InvalidParameterError("min_leaf must be >= 1 and min_split >= 2")
    if X.shape[0] < 1:
        raise InvalidDataError("empty training set")
    if complexity < 0:
        raise InvalidParameterError(f"complexity must be non-negative, got {complexity}")
    if max_depth < 0:
        raise InvalidParameterError(f"max_depth must be non-negative, got {max_depth}")
    return _grow_tree(X, y, min_split, min_leaf, complexity, max_depth, mtry=X.shape[1], gen=None)


@dataclass(frozen=True)
class ForestModel:
    """Bagged ensemble of CART trees; predictions average the members."""

    trees: tuple[TreeModel, ...]

    def predict(self, features) -> np.ndarray:
        X = _as_features(features)
        stacked = np.stack([tree.predict(X) for tree in self.trees])
        return stacked.mean(axis=0)


def fit_forest(features, targets, n_trees: int = 500, mtry: int | None = None,
               min_leaf: int = 5, rng: RngStream | None = None,
               bootstrap: bool = True) -> ForestModel:
    """Random forest: bootstrap resamples with per-split feature subsampling.

    Each tree draws from its own child stream of ``rng``, so results do not
    depend on fitting order.  mtry=None resolves to max(1, d // 3).
    """
    X, y = _as_xy(features, targets)
    n, d = X.shape
    if n_trees < 1:
        raise InvalidParameterError(f"need at least one tree, got {n_trees}")
    resolved_mtry = max(1, d // 3) if mtry is None else int(mtry)
    if not (1 <= resolved_mtry <= d):
        raise InvalidParameterError(f"mtry must lie in [1, {d}], got {resolved_mtry}")
    if min_leaf < 1:
        raise InvalidParameterError(f"min_leaf must be >= 1, got {min_leaf}")
    rng = rng if rng is not None else RngStream(0)

    trees = []
    for t in range(n_trees):
        gen = rng.child(t).generator()
        if bootstrap:
            idx = gen.integers(0, n, n)
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        trees.append(
            _grow_tree(
                Xt, yt,
                min_split=2 * min_leaf,
                min_leaf=min_leaf,
                complexity=0.0,
                max_depth=30,
                mtry=resolved_mtry,
                gen=gen,
            )
        )
    return ForestModel(trees=tuple(trees))


# ---------------------------------------------------------------------------
# dispatch and cross-validation
# ---------------------------------------------------------------------------


def fit_learner(spec: LearnerSpec, features, targets, rng: RngStream | None = None):
    """Fit any learner family from its spec; returns a fitted model."""
    params = spec.resolved_params()
    if spec.kind == "linear":
        return fit_ols(features, targets)
    if spec.kind == "lasso":
        model, _ = fit_lasso(
            features, targets,
            folds=int(params["folds"]),
            lambda_grid_size=int(params["lambda_grid_size"]),
            rng=rng,
        )
        return model
    if spec.kind == "tree":
        return fit_tree(
            features, targets,
            min_split=int(params["min_split"]),
            min_leaf=int(params["min_leaf"]),
            complexity=float(params["complexity"]),
            max_depth=int(params["max_depth"]),
        )
    if spec.kind == "forest":
        mtry = params["mtry"]
        return fit_forest(
            features, targets,
            n_trees=int(params["n_trees"]),
            mtry=None if mtry == "auto" else int(mtry),
            min_leaf=int(params["min_leaf"]),
            rng=rng,
            bootstrap=bool(params["bootstrap"]),
        )
    raise InvalidParameterError(f"unknown learner kind {spec.kind!r}")  # unreachable


def cross_validated_mse(learner: LearnerSpec, features, targets, folds: int,
                        rng: RngStream | None = None) -> float:
    """Mean held-out squared error over a K-fold partition of the rows."""
    X, y = _as_xy(features, targets)
    n = X.shape[0]
    if folds < 2:
        raise InvalidParameterError(f"cross-validation needs at least 2 folds, got {folds}")
    if folds > n:
        raise InvalidParameterError(f"more folds ({folds}) than rows ({n})")
    rng = rng if rng is not None else RngStream(0)
    perm = rng.generator().permutation(n)
    errors = []
    for k, held_out in enumerate(np.array_split(perm, folds)):
        mask = np.ones(n, dtype=bool)
        mask[held_out] = False
        model = fit_learner(learner, X[mask], y[mask], rng.child(k))
        preds = model.predict(X[held_out])
        errors.append(float(np.mean((y[held_out] - preds) ** 2)))
    return float(np.mean(errors))
