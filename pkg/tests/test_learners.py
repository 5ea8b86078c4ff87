import numpy as np
import pytest

from wear import (
    GeneratorSpec,
    InvalidDataError,
    InvalidParameterError,
    LearnerSpec,
    RngStream,
    SingularDesignError,
    SplitSpec,
    cross_validated_mse,
    fit_forest,
    fit_lasso,
    fit_learner,
    fit_ols,
    fit_tree,
    generate,
    lasso_kkt_gap,
    lasso_lambda_max,
    solve_lasso,
    split,
)
from wear import test_mse as mse_between
from conftest import make_linear_xy


class TestLearnerSpec:
    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            LearnerSpec("boosting")

    def test_unknown_param(self):
        with pytest.raises(InvalidParameterError):
            LearnerSpec("forest", {"trees": 10})

    def test_label_hides_defaults(self):
        assert LearnerSpec("forest").label() == "forest"
        assert LearnerSpec("forest", {"n_trees": 500}).label() == "forest"
        assert LearnerSpec("forest", {"n_trees": 50}).label() == "forest(n_trees=50)"

    def test_resolved_params(self):
        params = LearnerSpec("tree", {"min_leaf": 3}).resolved_params()
        assert params == {"min_split": 20, "min_leaf": 3, "complexity": 0.01, "max_depth": 30}


class TestFitOls:
    def test_noiseless_recovery(self):
        X, y = make_linear_xy(50, [2.0], intercept=1.0, noise_sd=0.0, seed=1)
        model = fit_ols(X, y)
        assert abs(model.coefficients[0] - 2.0) < 1e-8
        assert abs(model.intercept - 1.0) < 1e-8

    def test_constant_targets(self):
        X, _ = make_linear_xy(30, [1.0, 1.0], seed=2)
        model = fit_ols(X, np.full(30, 4.25))
        np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-10)
        assert abs(model.intercept - 4.25) < 1e-10

    def test_experiment3_coefficients_within_standard_errors(self):
        data = generate(GeneratorSpec(kind="experiment3", n=10_000, seed=3))
        X, y = data.features.values, data.true_labels
        model = fit_ols(X, y)
        # oracle: classical coefficient standard errors from the sampling distribution
        n, d = X.shape
        design = np.column_stack([np.ones(n), X])
        resid = y - model.predict(X)
        sigma2 = resid @ resid / (n - d - 1)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        ses = np.sqrt(np.diag(cov))[1:]
        np.testing.assert_array_less(np.abs(model.coefficients - np.array([2, 1, 5, 0.5, 4, 3])), 3 * ses)

    def test_singular_design_reports_columns(self):
        gen = np.random.default_rng(4)
        X = gen.normal(size=(40, 3))
        X[:, 2] = 2.0 * X[:, 0] - X[:, 1]  # exact collinearity
        with pytest.raises(SingularDesignError) as excinfo:
            fit_ols(X, X[:, 0])
        assert "collinear" in str(excinfo.value)
        assert len(excinfo.value.collinear_columns) >= 1

    def test_too_few_rows(self):
        with pytest.raises(InvalidDataError):
            fit_ols(np.ones((3, 3)), np.ones(3))

    def test_residual_orthogonality(self):
        for seed in range(5):
            X, y = make_linear_xy(120, [1.0, -2.0, 0.5], noise_sd=2.0, seed=seed)
            model = fit_ols(X, y)
            resid = y - model.predict(X)
            design = np.column_stack([np.ones(len(y)), X])
            for col in design.T:
                denom = np.linalg.norm(col) * np.linalg.norm(resid) + 1e-30
                assert abs(col @ resid) / denom < 1e-8

    def test_row_permutation_invariance(self):
        X, y = make_linear_xy(80, [1.0, 2.0], noise_sd=1.0, seed=5)
        perm = np.random.default_rng(6).permutation(80)
        a = fit_ols(X, y)
        b = fit_ols(X[perm], y[perm])
        np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=0, atol=1e-9)
        assert abs(a.intercept - b.intercept) < 1e-9


class TestLasso:
    def test_zero_penalty_matches_ols(self):
        X, y = make_linear_xy(150, [1.5, -0.5, 2.0], noise_sd=0.5, seed=7)
        ols = fit_ols(X, y)
        lasso = solve_lasso(X, y, 0.0)
        np.testing.assert_allclose(lasso.coefficients, ols.coefficients, atol=1e-6)
        assert abs(lasso.intercept - ols.intercept) < 1e-6

    def test_lambda_max_kills_every_slope(self):
        X, y = make_linear_xy(100, [3.0, 1.0], noise_sd=1.0, seed=8)
        lam = lasso_lambda_max(X, y)
        model = solve_lasso(X, y, lam)
        assert np.all(model.coefficients == 0.0)
        above = solve_lasso(X, y, 1.5 * lam)
        assert np.all(above.coefficients == 0.0)

    def test_noise_coefficients_shrink(self):
        # 6 informative + 4 pure-noise covariates; at the CV-chosen penalty the
        # noise slopes must stay tiny, and they shrink further as n grows
        informative = np.array([2.0, 1.0, 5.0, 0.5, 4.0, 3.0])

        def noise_coefs(n, seed):
            gen = np.random.default_rng(seed)
            X = gen.normal(size=(n, 10))
            y = X[:, :6] @ informative + gen.normal(size=n)
            model, path = fit_lasso(X, y, folds=5, lambda_grid_size=50, rng=RngStream(seed))
            assert path.chosen_lambda in path.lambda_grid
            assert np.all(np.isfinite(path.cv_errors))
            assert np.all(np.abs(model.coefficients[:6] - informative) < 0.3)
            return np.abs(model.coefficients[6:])

        small_n = noise_coefs(2000, seed=9)
        assert np.all(small_n < 0.05)
        large_n = noise_coefs(8000, seed=9)
        assert large_n.max() < max(small_n.max(), 0.02)

    def test_kkt_conditions_hold(self):
        for seed in range(4):
            X, y = make_linear_xy(120, [1.0, 0.0, -2.0, 0.0], noise_sd=1.0, seed=seed)
            lam = 0.3 * lasso_lambda_max(X, y)
            model = solve_lasso(X, y, lam)
            assert lasso_kkt_gap(X, y, model, lam) < 1e-6

    def test_cv_model_satisfies_kkt(self):
        X, y = make_linear_xy(200, [1.0, 0.0, 2.0], noise_sd=1.0, seed=11)
        model, path = fit_lasso(X, y, folds=5, lambda_grid_size=40, rng=RngStream(12))
        assert lasso_kkt_gap(X, y, model, path.chosen_lambda) < 1e-6

    def test_objective_non_increasing(self):
        X, y = make_linear_xy(150, [1.0, -1.0, 0.5], noise_sd=1.0, seed=13)
        trace: list[float] = []
        solve_lasso(X, y, 0.05 * lasso_lambda_max(X, y), objective_trace=trace)
        assert len(trace) >= 1
        diffs = np.diff(np.asarray(trace))
        assert np.all(diffs <= 1e-10 * max(1.0, abs(trace[0])))

    def test_row_permutation_invariance(self):
        X, y = make_linear_xy(90, [2.0, -1.0], noise_sd=0.5, seed=14)
        perm = np.random.default_rng(15).permutation(90)
        lam = 0.2 * lasso_lambda_max(X, y)
        a = solve_lasso(X, y, lam)
        b = solve_lasso(X[perm], y[perm], lam)
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-6)

    def test_rejects_nonfinite(self):
        X = np.ones((10, 2))
        X[0, 0] = np.nan
        with pytest.raises(InvalidDataError):
            fit_lasso(X, np.ones(10), rng=RngStream(0))

    def test_too_many_folds(self):
        X, y = make_linear_xy(6, [1.0], seed=16)
        with pytest.raises(InvalidParameterError):
            fit_lasso(X, y, folds=7, rng=RngStream(0))


def brute_force_best_split(x, y, min_leaf):
    """Enumerate every candidate threshold; the oracle for single-split trees."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    best = None
    for i in range(len(xs) - 1):
        if xs[i] >= xs[i + 1]:
            continue
        left, right = ys[: i + 1], ys[i + 1:]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        sse = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
        threshold = 0.5 * (xs[i] + xs[i + 1])
        if best is None or sse < best[0] - 1e-12:
            best = (sse, threshold, left.mean(), right.mean())
    return best


class TestFitTree:
    def test_single_split_matches_brute_force(self):
        x = np.array([1.0, 2.0, 3.0, 7.0, 8.0, 9.0])
        y = np.array([0.0, 0.0, 0.0, 10.0, 10.0, 10.0])
        _, threshold, left_mean, right_mean = brute_force_best_split(x, y, min_leaf=1)
        tree = fit_tree(x[:, None], y, min_split=2, min_leaf=1, complexity=0.0, max_depth=1)
        assert tree.n_nodes == 3
        assert 3.0 < tree.threshold[0] < 7.0
        assert tree.threshold[0] == threshold
        leaves = sorted([tree.value[tree.children_left[0]], tree.value[tree.children_right[0]]])
        assert leaves == sorted([left_mean, right_mean]) == [0.0, 10.0]

    def test_constant_targets_root_only(self):
        X = np.arange(12, dtype=float).reshape(6, 2)
        tree = fit_tree(X, np.full(6, 0.1))
        assert tree.n_nodes == 1
        np.testing.assert_allclose(tree.predict(X), 0.1)

    def test_training_mse_bounded_by_target_variance(self):
        for seed in range(4):
            gen = np.random.default_rng(seed)
            X = gen.normal(size=(300, 4))
            y = np.sin(X[:, 0]) + gen.normal(size=300)
            tree = fit_tree(X, y)
            assert mse_between(tree.predict(X), y) <= np.var(y) + 1e-12

    def test_leaf_predictions_are_cohort_means(self):
        gen = np.random.default_rng(17)
        X = gen.normal(size=(200, 3))
        y = X[:, 0] * 2 + gen.normal(size=200)
        tree = fit_tree(X, y, min_split=10, min_leaf=4)
        leaves = tree.apply(X)
        preds = tree.predict(X)
        for leaf in np.unique(leaves):
            cohort = y[leaves == leaf]
            np.testing.assert_allclose(preds[leaves == leaf], cohort.mean(), rtol=1e-12)

    def test_complexity_gate_blocks_weak_splits(self):
        # one strong split plus a weak refinement: a large complexity keeps only the strong one
        x = np.array([1.0, 2.0, 3.0, 4.0, 11.0, 12.0, 13.0, 14.0])
        y = np.array([0.0, 0.0, 0.1, 0.1, 10.0, 10.0, 10.1, 10.1])
        weak = fit_tree(x[:, None], y, min_split=2, min_leaf=2, complexity=0.2, max_depth=5)
        assert weak.n_nodes == 3
        fine = fit_tree(x[:, None], y, min_split=2, min_leaf=2, complexity=0.0, max_depth=5)
        assert fine.n_nodes == 7

    def test_row_permutation_leaves_tree_unchanged(self):
        gen = np.random.default_rng(18)
        X = gen.normal(size=(150, 3))
        y = X[:, 1] + 0.5 * gen.normal(size=150)
        perm = gen.permutation(150)
        a = fit_tree(X, y, min_split=10, min_leaf=4)
        b = fit_tree(X[perm], y[perm], min_split=10, min_leaf=4)
        probe = gen.normal(size=(60, 3))
        np.testing.assert_array_equal(a.predict(probe), b.predict(probe))

    def test_depth_limit(self):
        gen = np.random.default_rng(19)
        X = gen.normal(size=(400, 2))
        y = gen.normal(size=400)
        tree = fit_tree(X, y, min_split=4, min_leaf=1, complexity=0.0, max_depth=3)
        assert tree.depth <= 3

    def test_matches_recursive_reference(self):
        # independent recursive implementation with identical rules
        def grow(X, y, idx, depth, min_split, min_leaf, gain_floor, max_depth):
            node_y = y[idx]
            sse_node = np.sum((node_y - node_y.mean()) ** 2)
            if idx.size < min_split or depth >= max_depth or sse_node <= 1e-12 * idx.size * (np.mean(y * y) + 1):
                return node_y.mean()
            best = None
            for f in range(X.shape[1]):
                res = brute_force_best_split(X[idx, f], node_y, min_leaf)
                if res is None:
                    continue
                gain = sse_node - res[0]
                if best is None or gain > best[0] + 1e-12:
                    best = (gain, f, res[1])
            if best is None or best[0] < gain_floor:
                return node_y.mean()
            _, f, thr = best
            lm = X[idx, f] <= thr
            return (
                f,
                thr,
                grow(X, y, idx[lm], depth + 1, min_split, min_leaf, gain_floor, max_depth),
                grow(X, y, idx[~lm], depth + 1, min_split, min_leaf, gain_floor, max_depth),
            )

        def predict_one(node, x):
            while isinstance(node, tuple):
                f, thr, left, right = node
                node = left if x[f] <= thr else right
            return node

        for seed in range(3):
            gen = np.random.default_rng(100 + seed)
            X = gen.normal(size=(90, 3))
            y = 2 * X[:, 0] + 3 * (X[:, 1] > 0) + 0.3 * gen.normal(size=90)
            sse_root = np.sum((y - y.mean()) ** 2)
            reference = grow(X, y, np.arange(90), 0, 8, 3, 0.01 * sse_root, 6)
            tree = fit_tree(X, y, min_split=8, min_leaf=3, complexity=0.01, max_depth=6)
            probe = gen.normal(size=(40, 3))
            want = np.array([predict_one(reference, x) for x in probe])
            np.testing.assert_allclose(tree.predict(probe), want, rtol=1e-12)


class TestFitForest:
    def test_degenerate_forest_equals_tree(self):
        gen = np.random.default_rng(20)
        X = gen.normal(size=(120, 4))
        y = X[:, 0] - X[:, 2] + 0.2 * gen.normal(size=120)
        tree = fit_tree(X, y, min_split=10, min_leaf=5, complexity=0.0, max_depth=30)
        forest = fit_forest(X, y, n_trees=1, mtry=4, min_leaf=5, rng=RngStream(21), bootstrap=False)
        probe = gen.normal(size=(30, 4))
        np.testing.assert_array_equal(forest.predict(probe), tree.predict(probe))

    def test_constant_targets(self):
        gen = np.random.default_rng(22)
        X = gen.normal(size=(50, 3))
        forest = fit_forest(X, np.full(50, 2.5), n_trees=5, rng=RngStream(23))
        np.testing.assert_allclose(forest.predict(X), 2.5)

    def test_prediction_is_exact_mean_of_trees(self):
        gen = np.random.default_rng(24)
        X = gen.normal(size=(100, 3))
        y = X[:, 0] + gen.normal(size=100)
        forest = fit_forest(X, y, n_trees=7, rng=RngStream(25))
        probe = gen.normal(size=(20, 3))
        member = np.stack([tree.predict(probe) for tree in forest.trees])
        np.testing.assert_array_equal(forest.predict(probe), member.mean(axis=0))

    def test_replay_identical(self):
        gen = np.random.default_rng(26)
        X = gen.normal(size=(80, 3))
        y = X[:, 0] + gen.normal(size=80)
        a = fit_forest(X, y, n_trees=4, rng=RngStream(27))
        b = fit_forest(X, y, n_trees=4, rng=RngStream(27))
        probe = gen.normal(size=(20, 3))
        np.testing.assert_array_equal(a.predict(probe), b.predict(probe))

    def test_invalid_mtry(self):
        X, y = make_linear_xy(30, [1.0, 1.0], seed=28)
        with pytest.raises(InvalidParameterError):
            fit_forest(X, y, mtry=3, rng=RngStream(0))

    def test_beats_linear_on_quadratic_setting(self):
        # nonlinear setting: the forest must land a lower test error than least squares
        data = generate(GeneratorSpec(kind="experiment1", n=5000, seed=29))
        train, _, test = split(data, SplitSpec(0.7, 0.1, 0.2, seed=30))
        forest = fit_forest(
            train.features.values, train.true_labels, n_trees=100, rng=RngStream(31)
        )
        linear = fit_ols(train.features.values, train.true_labels)
        forest_mse = mse_between(forest.predict(test.features.values), test.true_labels)
        linear_mse = mse_between(linear.predict(test.features.values), test.true_labels)
        assert forest_mse < linear_mse


class TestCrossValidatedMse:
    def test_noiseless_linear(self):
        X, y = make_linear_xy(60, [1.0, 2.0], noise_sd=0.0, seed=32)
        assert cross_validated_mse(LearnerSpec("linear"), X, y, folds=5, rng=RngStream(33)) < 1e-10

    def test_constant_model_held_out_error(self):
        # a root-only tree predicts the training mean; its held-out error is
        # v * n / (n - 1) in expectation for variance-v targets
        gen = np.random.default_rng(34)
        n, v = 2000, 4.0
        X = gen.normal(size=(n, 2))
        y = gen.normal(0.0, np.sqrt(v), size=n)
        constant = LearnerSpec("tree", {"min_split": n + 1})
        got = cross_validated_mse(constant, X, y, folds=10, rng=RngStream(35))
        expected = v * n / (n - 1)
        assert abs(got - expected) / expected < 0.10

    def test_replay_identical(self):
        X, y = make_linear_xy(50, [1.0], noise_sd=1.0, seed=36)
        spec = LearnerSpec("tree")
        a = cross_validated_mse(spec, X, y, folds=5, rng=RngStream(37))
        b = cross_validated_mse(spec, X, y, folds=5, rng=RngStream(37))
        assert a == b

    def test_too_many_folds(self):
        X, y = make_linear_xy(5, [1.0], seed=38)
        with pytest.raises(InvalidParameterError):
            cross_validated_mse(LearnerSpec("linear"), X, y, folds=9, rng=RngStream(0))


class TestFitLearnerDispatch:
    @pytest.mark.parametrize("kind", ["linear", "lasso", "tree", "forest"])
    def test_every_kind_fits_and_predicts(self, kind):
        X, y = make_linear_xy(120, [1.0, -1.0, 2.0], noise_sd=0.5, seed=39)
        params = {"n_trees": 10} if kind == "forest" else {"folds": 4, "lambda_grid_size": 20} if kind == "lasso" else {}
        model = fit_learner(LearnerSpec(kind, params), X, y, RngStream(40))
        preds = model.predict(X)
        assert preds.shape == (120,)
        assert np.all(np.isfinite(preds))
