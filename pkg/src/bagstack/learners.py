"""Native base and meta learners.

Three model families share one prediction contract (rows of class
probabilities over the 4 classes):

* a CART-style classification tree with weighted Gini splits over
  quantile-derived candidate thresholds,
* a multiclass gradient-boosted-tree classifier (one regression tree per
  class per round, fit to softmax residuals on a 32-bin histogram),
* an L2-regularized multinomial logistic regression trained by full-batch
  gradient descent with step halving, used as the default meta-learner.

All fits are single-threaded and deterministic functions of
(inputs, spec, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import FeatureMatrix, TargetVector
from .errors import ConfigError, EmptyInputError, InvalidFeatureError, ShapeError

N_CLASSES = 4
GBM_BINS = 32  # candidate thresholds per feature for the boosted trees


@dataclass(frozen=True)
class TreeSpec:
    max_depth: int = 6
    min_samples_leaf: int = 20
    candidate_thresholds_per_feature: int = 32

    kind = "tree"

    def __post_init__(self):
        if self.max_depth < 1 or self.min_samples_leaf < 1 or self.candidate_thresholds_per_feature < 1:
            raise ConfigError(f"tree hyperparameters must be positive: {self}")


@dataclass(frozen=True)
class GbmSpec:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 4
    row_subsample: float = 1.0

    kind = "gbm"

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ConfigError("n_rounds must be >= 0")
        if self.learning_rate <= 0 or self.max_depth < 1:
            raise ConfigError(f"gbm hyperparameters must be positive: {self}")
        if not 0 < self.row_subsample <= 1:
            raise ConfigError(f"row_subsample must be in (0, 1], got {self.row_subsample}")


@dataclass(frozen=True)
class LogisticSpec:
    l2_lambda: float = 1.0
    max_iterations: int = 500
    step_size: float = 0.1
    convergence_tol: float = 1e-6

    kind = "logistic"

    def __post_init__(self):
        if self.l2_lambda <= 0 or self.step_size <= 0 or self.convergence_tol <= 0:
            raise ConfigError(f"logistic hyperparameters must be positive: {self}")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")


SPEC_KINDS = {"tree": TreeSpec, "gbm": GbmSpec, "logistic": LogisticSpec}


def make_spec(kind: str, **params):
    if kind not in SPEC_KINDS:
        raise ConfigError(f"unknown learner kind {kind!r}; choose from {sorted(SPEC_KINDS)}")
    try:
        return SPEC_KINDS[kind](**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def as_values(X) -> tuple[np.ndarray, list | None]:
    """Coerce a FeatureMatrix or 2-D array to (float64 values, column names)."""
    if isinstance(X, FeatureMatrix):
        return X.values, list(X.column_names)
    values = np.asarray(X, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"expected a 2-D feature array, got shape {values.shape}")
    return values, None


def as_classes(y) -> np.ndarray:
    if isinstance(y, TargetVector):
        return y.classes
    return np.asarray(y, dtype=np.int64)


def _check_training_input(X, y):
    values, columns = as_values(X)
    classes = as_classes(y)
    if values.shape[0] == 0:
        raise EmptyInputError("cannot fit on zero rows")
    if values.shape[0] != len(classes):
        raise ShapeError(f"{values.shape[0]} feature rows vs {len(classes)} targets")
    if not np.all(np.isfinite(values)):
        raise InvalidFeatureError("feature values contain NaN or infinities")
    if classes.min() < 0 or classes.max() >= N_CLASSES:
        raise ShapeError(f"class ids must lie in [0, {N_CLASSES})")
    return values, columns, classes


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(scores: np.ndarray, classes: np.ndarray) -> float:
    """Mean negative log-likelihood of the true classes under softmax(scores)."""
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(classes)), classes]))


def _quantile_thresholds(values: np.ndarray, n_thresholds: int) -> np.ndarray:
    """Equally spaced interior quantiles as order statistics (actual data values).

    Using elements of the sample keeps split decisions invariant under
    strictly monotone feature transforms.
    """
    xs = np.sort(values)
    q = np.arange(1, n_thresholds + 1) / (n_thresholds + 1)
    idx = np.floor(q * (len(xs) - 1)).astype(np.int64)
    thr = np.unique(xs[idx])
    return thr[thr < xs[-1]]


# ---------------------------------------------------------------------------
# Classification tree (CART)
# ---------------------------------------------------------------------------


@dataclass
class TreeModel:
    spec: TreeSpec
    column_names: list | None
    n_features: int
    feature: np.ndarray  # (n_nodes,) int64, -1 at leaves
    threshold: np.ndarray  # (n_nodes,) float64
    left: np.ndarray  # (n_nodes,) int64, -1 at leaves
    right: np.ndarray
    leaf_dist: np.ndarray  # (n_nodes, 4) float64, class distribution at leaves

    @property
    def n_nodes(self):
        return len(self.feature)


def fit_tree(X, y, weights=None, spec: TreeSpec | None = None) -> TreeModel:
    """Greedy top-down CART on weighted Gini impurity.

    Candidate thresholds per node are equally spaced quantiles of that
    node's feature values. Splitting stops on max_depth, min_samples_leaf,
    or a pure node; leaves hold the weighted class distribution.
    """
    spec = spec or TreeSpec()
    values, columns, classes = _check_training_input(X, y)
    n, d = values.shape
    if weights is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ShapeError(f"weights must be ({n},), got {weights.shape}")

    feature, threshold, left, right, dists = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dists.append(np.zeros(N_CLASSES))
        return len(feature) - 1

    def node_distribution(rows):
        dist = np.bincount(classes[rows], weights=weights[rows], minlength=N_CLASSES)
        return dist / dist.sum()

    def best_split(rows):
        best = None  # (weighted_gini, feature, threshold)
        x_rows = values[rows]
        w = weights[rows]
        w_total = w.sum()
        onehot = np.zeros((len(rows), N_CLASSES))
        onehot[np.arange(len(rows)), classes[rows]] = 1.0
        parent_dist = (w[:, None] * onehot).sum(axis=0)
        for f in range(d):
            col = x_rows[:, f]
            thr = _quantile_thresholds(col, spec.candidate_thresholds_per_feature)
            if len(thr) == 0:
                continue
            order = np.argsort(col, kind="stable")
            xs = col[order]
            cum_w = np.cumsum(w[order])
            cum_wc = np.cumsum((w[order, None] * onehot[order]), axis=0)
            pos = np.searchsorted(xs, thr, side="right")
            n_left = pos
            n_right = len(rows) - pos
            ok = (n_left >= spec.min_samples_leaf) & (n_right >= spec.min_samples_leaf)
            if not ok.any():
                continue
            w_left = cum_w[pos - 1]
            wc_left = cum_wc[pos - 1]
            w_right = w_total - w_left
            wc_right = parent_dist - wc_left
            gini_left = 1.0 - np.sum((wc_left / w_left[:, None]) ** 2, axis=1)
            gini_right = 1.0 - np.sum((wc_right / w_right[:, None]) ** 2, axis=1)
            score = (w_left * gini_left + w_right * gini_right) / w_total
            score[~ok] = np.inf
            j = int(np.argmin(score))
            # zero-gain splits are allowed; only depth, leaf size, and purity stop growth
            if np.isfinite(score[j]) and (best is None or score[j] < best[0] - 1e-15):
                best = (float(score[j]), f, float(thr[j]))
        return best

    def grow(rows, depth):
        node = new_node()
        dists[node] = node_distribution(rows)
        pure = len(np.unique(classes[rows])) == 1
        if depth >= spec.max_depth or pure or len(rows) < 2 * spec.min_samples_leaf:
            return node
        split = best_split(rows)
        if split is None:
            return node
        _, f, thr = split
        go_left = values[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(rows[go_left], depth + 1)
        right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(n), 0)
    return TreeModel(
        spec=spec,
        column_names=columns,
        n_features=d,
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        leaf_dist=np.vstack(dists),
    )


def _route_to_leaves(values, feature, threshold, left, right) -> np.ndarray:
    node = np.zeros(len(values), dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        idx = np.flatnonzero(active)
        cur = node[idx]
        x = values[idx, feature[cur]]
        node[idx] = np.where(x <= threshold[cur], left[cur], right[cur])
        active[idx] = feature[node[idx]] >= 0
    return node


# ---------------------------------------------------------------------------
# Gradient-boosted trees
# ---------------------------------------------------------------------------


@dataclass
class BoostedTree:
    """One regression tree of the boosting ensemble (stores real thresholds)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes,) leaf values (mean residual)

    def predict(self, values: np.ndarray) -> np.ndarray:
        leaf = _route_to_leaves(values, self.feature, self.threshold, self.left, self.right)
        return self.value[leaf]


@dataclass
class GbmModel:
    spec: GbmSpec
    column_names: list | None
    n_features: int
    init_scores: np.ndarray  # (4,) log class priors
    trees: list = field(default_factory=list)  # n_rounds entries of 4 BoostedTree

    def raw_scores(self, values: np.ndarray) -> np.ndarray:
        scores = np.tile(self.init_scores, (len(values), 1))
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                scores[:, c] += self.spec.learning_rate * tree.predict(values)
        return scores


def _fit_histogram_tree(sub_fkey, sub_res, bin_thresholds, max_depth):
    """Level-wise regression tree on pre-binned features, maximizing SSE reduction.

    sub_fkey holds per-row (feature, bin) composite keys (bin + feature * n_bins)
    for the sampled rows; sub_res the residuals being fit.
    """
    n_feat = sub_fkey.shape[1]
    n_bins = GBM_BINS + 1
    stride = n_feat * n_bins
    m = len(sub_res)
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [float(sub_res.mean())]
    node_of_row = np.zeros(m, dtype=np.int64)
    open_nodes = [0]

    for depth in range(max_depth):
        if not open_nodes:
            break
        slot = np.full(len(feature), -1, dtype=np.int64)
        slot[open_nodes] = np.arange(len(open_nodes))
        slot_of_row = slot[node_of_row]
        if depth == 0:
            keys, res = sub_fkey, sub_res
        elif (slot_of_row >= 0).all():
            keys, res = sub_fkey + (slot_of_row * stride)[:, None], sub_res
        else:
            idx = np.flatnonzero(slot_of_row >= 0)
            keys = sub_fkey[idx] + (slot_of_row[idx] * stride)[:, None]
            res = sub_res[idx]
        size = len(open_nodes) * stride
        counts = np.bincount(keys.ravel(), minlength=size).reshape(-1, n_feat, n_bins)
        sums = np.bincount(
            keys.ravel(), weights=np.repeat(res, n_feat), minlength=size
        ).reshape(-1, n_feat, n_bins)

        cnt_left = counts.cumsum(axis=2)[:, :, :-1]
        sum_left = sums.cumsum(axis=2)[:, :, :-1]
        cnt_tot = cnt_left[:, :, -1:] + counts[:, :, -1:]
        sum_tot = sum_left[:, :, -1:] + sums[:, :, -1:]
        cnt_right = cnt_tot - cnt_left
        sum_right = sum_tot - sum_left
        ok = (cnt_left > 0) & (cnt_right > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = (
                sum_left**2 / cnt_left
                + sum_right**2 / cnt_right
                - sum_tot**2 / np.maximum(cnt_tot, 1)
            )
        gain[~ok] = -np.inf

        next_open = []
        flat = gain.reshape(len(open_nodes), -1)
        best = flat.argmax(axis=1)
        for i, nd in enumerate(open_nodes):
            if flat[i, best[i]] <= 1e-12:
                continue
            f, b = divmod(int(best[i]), n_bins - 1)
            feature[nd] = f
            threshold[nd] = float(bin_thresholds[f][b])
            # children get their values here so leaves at max_depth are complete
            child_values = (
                float(sum_left[i, f, b]) / float(cnt_left[i, f, b]),
                float(sum_right[i, f, b]) / float(cnt_right[i, f, b]),
            )
            for child_value in child_values:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(child_value)
            left[nd], right[nd] = len(feature) - 2, len(feature) - 1
            rows_here = np.flatnonzero(node_of_row == nd)
            go_left = sub_fkey[rows_here, f] <= f * n_bins + b
            node_of_row[rows_here] = np.where(go_left, left[nd], right[nd])
            next_open += [left[nd], right[nd]]
        open_nodes = next_open

    return BoostedTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value),
    )


def fit_gbm(X, y, spec: GbmSpec | None = None, seed: int = 0) -> GbmModel:
    """Multiclass gradient boosting: per round, one regression tree per class
    fit to the softmax residual (one-hot minus predicted probability)."""
    spec = spec or GbmSpec()
    values, columns, classes = _check_training_input(X, y)
    n, d = values.shape

    counts = np.bincount(classes, minlength=N_CLASSES)
    with np.errstate(divide="ignore"):
        init_scores = np.log(counts / n)
    model = GbmModel(spec=spec, column_names=columns, n_features=d, init_scores=init_scores)
    if spec.n_rounds == 0:
        return model

    bin_thresholds = [_quantile_thresholds(values[:, f], GBM_BINS) for f in range(d)]
    binned = np.empty((n, d), dtype=np.int64)
    for f in range(d):
        binned[:, f] = np.searchsorted(bin_thresholds[f], values[:, f], side="left")
    n_bins = GBM_BINS + 1
    fkey = binned + np.arange(d, dtype=np.int64) * n_bins  # row-major (feature, bin) keys

    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), classes] = 1.0
    scores = np.tile(init_scores, (n, 1))
    rng = np.random.default_rng(seed)
    m_sub = max(1, int(round(spec.row_subsample * n)))

    for _ in range(spec.n_rounds):
        proba = softmax(scores)
        if spec.row_subsample < 1.0:
            rows = np.sort(rng.choice(n, size=m_sub, replace=False))
            sub_fkey = fkey[rows]
        else:
            rows = slice(None)
            sub_fkey = fkey
        round_trees = []
        for c in range(N_CLASSES):
            residual = onehot[:, c] - proba[:, c]
            tree = _fit_histogram_tree(sub_fkey, residual[rows], bin_thresholds, spec.max_depth)
            leaf = _route_to_leaves(values, tree.feature, tree.threshold, tree.left, tree.right)
            scores[:, c] += spec.learning_rate * tree.value[leaf]
            round_trees.append(tree)
        model.trees.append(round_trees)
    return model


# ---------------------------------------------------------------------------
# Multinomial logistic regression
# ---------------------------------------------------------------------------


@dataclass
class LogisticModel:
    spec: LogisticSpec
    column_names: list | None
    n_features: int
    weights: np.ndarray  # (d, 4)
    bias: np.ndarray  # (4,)
    objective_history: list = field(default_factory=list, repr=False)


def logistic_objective(values, onehot, weights, bias, l2_lambda) -> float:
    scores = values @ weights + bias
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    ce = float(np.mean(log_norm - (z * onehot).sum(axis=1)))
    return ce + 0.5 * l2_lambda * float(np.sum(weights**2))


def logistic_gradient(values, onehot, weights, bias, l2_lambda):
    proba = softmax(values @ weights + bias)
    delta = (proba - onehot) / len(values)
    return values.T @ delta + l2_lambda * weights, delta.sum(axis=0)


def fit_logistic(X, y, spec: LogisticSpec | None = None) -> LogisticModel:
    """Full-batch gradient descent on L2-regularized softmax cross-entropy.

    The quadratic penalty's part of the step is taken in closed form
    (divide by 1 + step * lambda), which keeps the iteration stable for
    arbitrarily strong regularization; the bias is unregularized, so in the
    strong-regularization limit the weights vanish and predictions approach
    the class priors. Step halving on objective increase keeps the recorded
    objective non-increasing, and iteration stops at max_iterations or when
    the gradient's max-norm falls below convergence_tol.
    """
    spec = spec or LogisticSpec()
    values, columns, classes = _check_training_input(X, y)
    n, d = values.shape
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), classes] = 1.0

    weights = np.zeros((d, N_CLASSES))
    bias = np.zeros(N_CLASSES)
    history = [logistic_objective(values, onehot, weights, bias, spec.l2_lambda)]

    for _ in range(spec.max_iterations):
        grad_w, grad_b = logistic_gradient(values, onehot, weights, bias, spec.l2_lambda)
        if max(np.abs(grad_w).max(), np.abs(grad_b).max()) < spec.convergence_tol:
            break
        data_grad_w = grad_w - spec.l2_lambda * weights
        step = spec.step_size
        accepted = False
        for _ in range(60):
            cand_w = (weights - step * data_grad_w) / (1.0 + step * spec.l2_lambda)
            cand_b = bias - step * grad_b
            obj = logistic_objective(values, onehot, cand_w, cand_b, spec.l2_lambda)
            if obj <= history[-1]:
                weights, bias = cand_w, cand_b
                history.append(obj)
                accepted = True
                break
            step /= 2
        if not accepted:
            break
    return LogisticModel(
        spec=spec,
        column_names=columns,
        n_features=d,
        weights=weights,
        bias=bias,
        objective_history=history,
    )


# ---------------------------------------------------------------------------
# Shared prediction contract
# ---------------------------------------------------------------------------


def fit_model(spec, X, y, seed: int = 0):
    """Dispatch to the fit routine matching the spec's kind."""
    if isinstance(spec, TreeSpec):
        return fit_tree(X, y, spec=spec)
    if isinstance(spec, GbmSpec):
        return fit_gbm(X, y, spec=spec, seed=seed)
    if isinstance(spec, LogisticSpec):
        return fit_logistic(X, y, spec=spec)
    raise ConfigError(f"unknown learner spec {spec!r}")


def predict_proba(model, X) -> np.ndarray:
    """Class-probability rows for any trained model; rows sum to 1."""
    values, _ = as_values(X)
    if values.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {values.shape[1]}")
    if isinstance(model, TreeModel):
        leaf = _route_to_leaves(values, model.feature, model.threshold, model.left, model.right)
        return model.leaf_dist[leaf]
    if isinstance(model, GbmModel):
        return softmax(model.raw_scores(values))
    if isinstance(model, LogisticModel):
        return softmax(values @ model.weights + model.bias)
    raise ConfigError(f"unknown model type {type(model).__name__}")


def check_probability_matrix(proba: np.ndarray, atol: float = 1e-9) -> None:
    if proba.ndim != 2 or proba.shape[1] != N_CLASSES:
        raise ShapeError(f"expected (n, {N_CLASSES}) probabilities, got {proba.shape}")
    if proba.size == 0:
        return
    if proba.min() < -atol or proba.max() > 1 + atol:
        raise ShapeError("probabilities out of [0, 1]")
    if np.abs(proba.sum(axis=1) - 1).max() > atol:
        raise ShapeError("probability rows must sum to 1")
