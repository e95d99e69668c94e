import numpy as np
import pytest

from bagstack import (
    GbmSpec,
    LogisticSpec,
    TreeSpec,
    fit_gbm,
    fit_logistic,
    fit_tree,
    make_spec,
    model_to_text,
    predict_proba,
    softmax_cross_entropy,
)
from bagstack.errors import ConfigError, EmptyInputError, InvalidFeatureError, ShapeError
from bagstack.learners import (
    check_probability_matrix,
    logistic_gradient,
    logistic_objective,
)


def walk_tree(tree, row):
    """Independent recursive router used by the oracle tests."""
    node = 0
    while tree.feature[node] >= 0:
        if row[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return node


# --- classification tree ----------------------------------------------------


def test_pure_node_single_leaf():
    X = np.arange(12, dtype=float).reshape(6, 2)
    y = np.full(6, 2)
    model = fit_tree(X, y, spec=TreeSpec(min_samples_leaf=1))
    assert model.n_nodes == 1
    assert predict_proba(model, X)[0].tolist() == [0.0, 0.0, 1.0, 0.0]


def test_single_row_one_hot_leaf():
    model = fit_tree(np.array([[0.3, 1.2]]), np.array([3]), spec=TreeSpec(min_samples_leaf=1))
    assert model.n_nodes == 1
    assert predict_proba(model, np.array([[9.9, -1.0]]))[0].tolist() == [0.0, 0.0, 0.0, 1.0]


def xor_depth2_separator_exists(X, y):
    """Exhaustive oracle: some (feature, threshold) root split allows each
    side to be finished off by one more split."""

    def splittable_pure(rows):
        if len(set(y[rows])) == 1:
            return True
        for f in range(X.shape[1]):
            for t in X[rows, f]:
                left = [r for r in rows if X[r, f] <= t]
                right = [r for r in rows if X[r, f] > t]
                if left and right and len(set(y[left])) == 1 and len(set(y[right])) == 1:
                    return True
        return False

    rows = list(range(len(y)))
    for f in range(X.shape[1]):
        for t in X[:, f]:
            left = [r for r in rows if X[r, f] <= t]
            right = [r for r in rows if X[r, f] > t]
            if left and right and splittable_pure(left) and splittable_pure(right):
                return True
    return False


def test_xor_layout_fit_perfectly():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([1, 0, 0, 1])
    assert xor_depth2_separator_exists(X, y)
    model = fit_tree(X, y, spec=TreeSpec(max_depth=2, min_samples_leaf=1))
    predicted = predict_proba(model, X).argmax(axis=1)
    assert np.array_equal(predicted, y)


def test_tree_monotone_transform_invariance(rng):
    X = rng.normal(size=(200, 5))
    y = rng.integers(0, 4, size=200)
    spec = TreeSpec(max_depth=4, min_samples_leaf=5)
    base = predict_proba(fit_tree(X, y, spec=spec), X).argmax(axis=1)
    X2 = X.copy()
    X2[:, 2] = np.exp(X2[:, 2])  # strictly monotone on one column
    transformed = predict_proba(fit_tree(X2, y, spec=spec), X2).argmax(axis=1)
    assert np.array_equal(base, transformed)


def test_tree_respects_weights():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    weights = np.array([1.0, 1.0, 9.0, 9.0])
    model = fit_tree(X, y, weights=weights, spec=TreeSpec(max_depth=1, min_samples_leaf=1))
    leaf = walk_tree(model, [3.0])
    assert model.leaf_dist[leaf, 1] == 1.0


def test_tree_input_validation():
    with pytest.raises(EmptyInputError):
        fit_tree(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(InvalidFeatureError):
        fit_tree(np.array([[np.nan]]), np.array([0]))
    with pytest.raises(ShapeError):
        fit_tree(np.zeros((3, 2)), np.zeros(2, dtype=int))


# --- gradient boosting -------------------------------------------------------


def test_gbm_zero_rounds_predicts_priors(rng):
    X = rng.normal(size=(40, 3))
    y = np.array([0] * 10 + [1] * 20 + [2] * 10)
    model = fit_gbm(X, y, spec=GbmSpec(n_rounds=0))
    proba = predict_proba(model, X)
    expected = np.array([0.25, 0.5, 0.25, 0.0])
    assert np.allclose(proba, expected, atol=1e-12)


def test_gbm_reduces_loss_on_separable_data(rng):
    X = np.vstack([rng.normal(-2, 0.5, size=(40, 2)), rng.normal(2, 0.5, size=(40, 2))])
    y = np.array([0] * 40 + [1] * 40)
    model = fit_gbm(X, y, spec=GbmSpec(n_rounds=50, learning_rate=0.1, max_depth=2), seed=0)
    prior_scores = np.tile(model.init_scores, (len(X), 1))
    assert softmax_cross_entropy(model.raw_scores(X), y) < softmax_cross_entropy(prior_scores, y)


def test_gbm_loss_never_exceeds_prior_loss(rng):
    for trial in range(3):
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 4, size=60)
        model = fit_gbm(X, y, spec=GbmSpec(n_rounds=10, learning_rate=0.3, max_depth=2), seed=trial)
        prior = np.tile(model.init_scores, (len(X), 1))
        assert softmax_cross_entropy(model.raw_scores(X), y) <= softmax_cross_entropy(prior, y)


def test_gbm_subsample_deterministic(rng):
    X = rng.normal(size=(80, 4))
    y = rng.integers(0, 3, size=80)
    spec = GbmSpec(n_rounds=12, learning_rate=0.2, max_depth=3, row_subsample=0.8)
    a = model_to_text(fit_gbm(X, y, spec=spec, seed=42))
    b = model_to_text(fit_gbm(X, y, spec=spec, seed=42))
    assert a == b
    c = model_to_text(fit_gbm(X, y, spec=spec, seed=43))
    assert a != c


def test_gbm_matches_naive_score_accumulation(rng):
    X = rng.normal(size=(100, 5))
    y = rng.integers(0, 4, size=100)
    model = fit_gbm(X, y, spec=GbmSpec(n_rounds=8, learning_rate=0.25, max_depth=3), seed=7)
    proba = predict_proba(model, X)
    # Oracle: accumulate scores tree by tree with an independent router.
    scores = np.tile(model.init_scores, (len(X), 1))
    for round_trees in model.trees:
        for c, tree in enumerate(round_trees):
            for i in range(len(X)):
                scores[i, c] += model.spec.learning_rate * tree.value[walk_tree(tree, X[i])]
    z = np.exp(scores - scores.max(axis=1, keepdims=True))
    expected = z / z.sum(axis=1, keepdims=True)
    assert np.abs(proba - expected).max() < 1e-12


def test_gbm_prediction_rows_stochastic(rng):
    X = rng.normal(size=(30, 3))
    y = rng.integers(0, 4, size=30)
    model = fit_gbm(X, y, spec=GbmSpec(n_rounds=5, max_depth=2), seed=1)
    check_probability_matrix(predict_proba(model, rng.normal(size=(50, 3))))


# --- logistic regression ------------------------------------------------------


def test_logistic_zero_iterations_uniform(rng):
    X = rng.normal(size=(20, 6))
    y = rng.integers(0, 4, size=20)
    model = fit_logistic(X, y, spec=LogisticSpec(max_iterations=0))
    assert np.allclose(predict_proba(model, X), 0.25, atol=1e-15)


def test_logistic_strong_regularization_reaches_priors(rng):
    X = rng.normal(size=(200, 4))
    y = np.array([0] * 100 + [1] * 20 + [2] * 50 + [3] * 30)
    model = fit_logistic(X, y, spec=LogisticSpec(l2_lambda=1e6, max_iterations=500))
    assert np.abs(model.weights).max() < 1e-4
    proba = predict_proba(model, X)
    # weights vanish, so every row collapses to softmax(bias) ~ class priors
    assert proba.std(axis=0).max() < 1e-4
    assert np.allclose(proba.mean(axis=0), [0.5, 0.1, 0.25, 0.15], atol=0.01)


def test_logistic_gradient_matches_finite_differences(rng):
    X = rng.normal(size=(10, 4))
    y = rng.integers(0, 4, size=10)
    onehot = np.zeros((10, 4))
    onehot[np.arange(10), y] = 1.0
    weights = rng.normal(scale=0.5, size=(4, 4))
    bias = rng.normal(scale=0.5, size=4)
    lam = 0.7
    grad_w, grad_b = logistic_gradient(X, onehot, weights, bias, lam)

    eps = 1e-6
    for arr, grad in ((weights, grad_w), (bias, grad_b)):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            hi = logistic_objective(X, onehot, weights, bias, lam)
            arr[idx] = orig - eps
            lo = logistic_objective(X, onehot, weights, bias, lam)
            arr[idx] = orig
            fd = (hi - lo) / (2 * eps)
            assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_logistic_separates_wide_margin_data(rng):
    # Oracle: data built from a known separating hyperplane (feature 0 sign).
    n = 60
    X = np.vstack([rng.uniform(1, 2, size=(n, 1)), rng.uniform(-2, -1, size=(n, 1))])
    X = np.hstack([X, rng.normal(size=(2 * n, 2))])
    y = np.array([1] * n + [2] * n)
    assert ((X[:, 0] > 0) == (y == 1)).all()
    model = fit_logistic(X, y, spec=LogisticSpec(l2_lambda=1e-4, max_iterations=500, step_size=0.5))
    predicted = predict_proba(model, X).argmax(axis=1)
    assert np.array_equal(predicted, y)


def test_logistic_objective_monotone(rng):
    X = rng.normal(size=(50, 5))
    y = rng.integers(0, 4, size=50)
    model = fit_logistic(X, y, spec=LogisticSpec(max_iterations=200, step_size=1.0))
    history = np.array(model.objective_history)
    assert (np.diff(history) <= 0).all()


def test_logistic_converges_before_max_iterations(rng):
    X = rng.normal(size=(30, 2))
    y = rng.integers(0, 2, size=30)
    model = fit_logistic(X, y, spec=LogisticSpec(max_iterations=100000, convergence_tol=1e-4))
    assert len(model.objective_history) < 100000


# --- shared contract ----------------------------------------------------------


def test_predict_dimension_mismatch(rng):
    X = rng.normal(size=(20, 3))
    y = rng.integers(0, 2, size=20)
    model = fit_logistic(X, y)
    with pytest.raises(ShapeError):
        predict_proba(model, rng.normal(size=(5, 4)))


def test_make_spec_and_validation():
    assert make_spec("gbm", n_rounds=5) == GbmSpec(n_rounds=5)
    with pytest.raises(ConfigError):
        make_spec("svm")
    with pytest.raises(ConfigError):
        make_spec("gbm", rounds=5)
    with pytest.raises(ConfigError):
        GbmSpec(row_subsample=0.0)
    with pytest.raises(ConfigError):
        TreeSpec(max_depth=0)
    with pytest.raises(ConfigError):
        LogisticSpec(l2_lambda=0.0)


def test_probability_invariants_across_models(rng):
    X = rng.normal(size=(40, 4))
    y = rng.integers(0, 4, size=40)
    for model in (
        fit_tree(X, y, spec=TreeSpec(max_depth=3, min_samples_leaf=2)),
        fit_gbm(X, y, spec=GbmSpec(n_rounds=4, max_depth=2), seed=0),
        fit_logistic(X, y, spec=LogisticSpec(max_iterations=50)),
    ):
        check_probability_matrix(predict_proba(model, rng.normal(size=(25, 4))))
