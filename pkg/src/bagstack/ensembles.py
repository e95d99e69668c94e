"""Bootstrap sampling, bagging, stacking, and the bagstacking hybrid.

Bagging trains k models on bootstrap resamples and averages their
probability outputs. Stacking trains a meta-learner on out-of-fold base
predictions. Bagstacking combines the two: k base models on bootstrap
resamples, then a meta-learner trained on the concatenation of their
probability outputs over the original training rows.

Meta-feature construction for bagstacking has two modes:

* ``paper_literal`` (default): every base model predicts on the full
  original training set. Simple, but rows that a model saw in its
  bootstrap sample contribute in-sample predictions to the meta-features.
* ``out_of_fold``: rows outside model i's bootstrap sample get model i's
  prediction directly (they are out-of-bag); rows inside it get the
  prediction of a surrogate trained under 5-fold cross-validation within
  the bootstrap sample, so no meta-feature row ever depends on its own label.

Per-model seeds are derived by hashing (master_seed, model_index), so
results do not depend on training order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError, FoldError, ShapeError
from .learners import (
    N_CLASSES,
    as_classes,
    as_values,
    fit_model,
    predict_proba,
)

MODES = ("paper_literal", "out_of_fold")
SURROGATE_FOLDS = 5

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *indices: int) -> int:
    """Stable per-model seed from a master seed and index path."""
    ss = np.random.SeedSequence([master_seed & _MASK64, *[i & _MASK64 for i in indices]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class BootstrapPlan:
    """k uniform with-replacement resamples of [0, n), each of size n."""

    n: int
    k: int
    master_seed: int
    index_sets: list

    def __post_init__(self):
        assert len(self.index_sets) == self.k
        for s in self.index_sets:
            assert len(s) == self.n


def bootstrap_indices(n: int, k: int, master_seed: int) -> BootstrapPlan:
    if n < 1:
        raise EmptyInputError("cannot bootstrap zero rows")
    if k < 1:
        raise ConfigError("need at least one bootstrap set")
    index_sets = []
    for i in range(k):
        rng = np.random.default_rng(derive_seed(master_seed, i))
        index_sets.append(rng.integers(0, n, size=n, dtype=np.int64))
    return BootstrapPlan(n=n, k=k, master_seed=master_seed, index_sets=index_sets)


@dataclass
class BaggingModel:
    models: list
    plan: BootstrapPlan
    spec: object = None


@dataclass
class StackingModel:
    base_models: list
    meta_model: object
    folds: int
    seed: int


@dataclass
class BagStackingModel:
    base_models: list
    meta_model: object
    plan: BootstrapPlan
    mode: str
    spec: object = None
    feature_config: object = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.base_models) < 2:
            raise ConfigError("bagstacking needs at least 2 base models")
        if self.meta_model.n_features != len(self.base_models) * N_CLASSES:
            raise ShapeError(
                f"meta-learner expects {self.meta_model.n_features} inputs, "
                f"but {len(self.base_models)} base models produce "
                f"{len(self.base_models) * N_CLASSES}"
            )


def concat_probability_blocks(blocks: list) -> np.ndarray:
    """Meta-feature matrix [p_1 | p_2 | ... | p_k], one 4-wide block per model."""
    return np.concatenate(blocks, axis=1)


def fit_bagging(spec, X, y, k: int, seed: int) -> BaggingModel:
    """Train k copies of `spec` on bootstrap resamples of (X, y)."""
    if k < 2:
        raise ConfigError("bagging needs k >= 2")
    values, _ = as_values(X)
    classes = as_classes(y)
    plan = bootstrap_indices(len(values), k, seed)
    models = []
    for i, idx in enumerate(plan.index_sets):
        models.append(fit_model(spec, values[idx], classes[idx], seed=derive_seed(seed, i)))
    return BaggingModel(models=models, plan=plan, spec=spec)


def predict_bagging(model: BaggingModel, X) -> np.ndarray:
    """Arithmetic mean of the member probability outputs, in member order."""
    values, _ = as_values(X)
    total = np.zeros((len(values), N_CLASSES))
    for member in model.models:
        total += predict_proba(member, values)
    return total / len(model.models)


def stacking_fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Deterministic fold id per row for out-of-fold meta-feature construction."""
    rng = np.random.default_rng(derive_seed(seed, 0x0F))
    fold_of_row = np.empty(n, dtype=np.int64)
    for f, chunk in enumerate(np.array_split(rng.permutation(n), folds)):
        fold_of_row[chunk] = f
    return fold_of_row


def _oof_block(spec, values, classes, fold_of_row, folds, seed) -> np.ndarray:
    block = np.empty((len(values), N_CLASSES))
    for f in range(folds):
        held = fold_of_row == f
        member = fit_model(spec, values[~held], classes[~held], seed=derive_seed(seed, f))
        block[held] = predict_proba(member, values[held])
    return block


def stacking_meta_features(base_specs, X, y, folds: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-fold meta-features for stacking; returns (meta_features, fold_of_row).

    Row r of base spec j's block is predicted by a model whose training
    folds exclude r.
    """
    if folds < 2:
        raise FoldError("stacking needs at least 2 folds")
    values, _ = as_values(X)
    classes = as_classes(y)
    n = len(values)
    if folds > n:
        raise FoldError(f"{folds} folds but only {n} rows")
    fold_of_row = stacking_fold_assignment(n, folds, seed)
    blocks = [
        _oof_block(spec, values, classes, fold_of_row, folds, derive_seed(seed, j, 0x0F))
        for j, spec in enumerate(base_specs)
    ]
    return concat_probability_blocks(blocks), fold_of_row


def fit_stacking(base_specs, meta_spec, X, y, folds: int, seed: int) -> StackingModel:
    """Classic stacked generalization.

    Each base spec contributes one out-of-fold probability block to the
    meta-features; the base models used at inference are refit on the full
    data afterwards.
    """
    if len(base_specs) < 2:
        raise ConfigError("stacking needs at least 2 base specs")
    values, _ = as_values(X)
    classes = as_classes(y)
    meta_features, _ = stacking_meta_features(base_specs, values, classes, folds, seed)
    meta_model = fit_model(meta_spec, meta_features, classes, seed=derive_seed(seed, len(base_specs)))
    base_models = [
        fit_model(spec, values, classes, seed=derive_seed(seed, j))
        for j, spec in enumerate(base_specs)
    ]
    return StackingModel(base_models=base_models, meta_model=meta_model, folds=folds, seed=seed)


def predict_stacking(model: StackingModel, X) -> np.ndarray:
    values, _ = as_values(X)
    blocks = [predict_proba(m, values) for m in model.base_models]
    return predict_proba(model.meta_model, concat_probability_blocks(blocks))


def _in_bag_cv_block(spec, values, classes, bag_indices, base_model, seed) -> np.ndarray:
    """Meta-feature block for one bootstrap member in out_of_fold mode.

    Out-of-bag rows get the member's own prediction. In-bag rows get a
    prediction from a surrogate trained on the bootstrap sample minus every
    occurrence of those rows (5-fold CV over the unique in-bag row ids).
    """
    n = len(values)
    block = np.empty((n, N_CLASSES))
    in_bag = np.zeros(n, dtype=bool)
    in_bag[bag_indices] = True
    oob = ~in_bag
    if oob.any():
        block[oob] = predict_proba(base_model, values[oob])

    unique_rows = np.flatnonzero(in_bag)
    if len(unique_rows) < 2:
        raise FoldError("out_of_fold mode needs at least 2 distinct in-bag rows")
    folds = min(SURROGATE_FOLDS, len(unique_rows))
    rng = np.random.default_rng(derive_seed(seed, 0x0B))
    fold_of_unique = np.empty(len(unique_rows), dtype=np.int64)
    for f, chunk in enumerate(np.array_split(rng.permutation(len(unique_rows)), folds)):
        fold_of_unique[chunk] = f
    fold_of_row = np.full(n, -1, dtype=np.int64)
    fold_of_row[unique_rows] = fold_of_unique

    for f in range(folds):
        held_rows = unique_rows[fold_of_unique == f]
        keep = fold_of_row[bag_indices] != f  # drops every occurrence of held rows
        train_idx = bag_indices[keep]
        surrogate = fit_model(spec, values[train_idx], classes[train_idx], seed=derive_seed(seed, f))
        block[held_rows] = predict_proba(surrogate, values[held_rows])
    return block


def bagstacking_meta_features(spec, X, y, k: int, seed: int, mode: str = "paper_literal"):
    """Base models plus their meta-feature matrix over the original rows.

    Returns (meta_features, plan, base_models); fit_bagstacking trains the
    meta-learner on top.
    """
    if k < 2:
        raise ConfigError("bagstacking needs k >= 2")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    values, _ = as_values(X)
    classes = as_classes(y)
    plan = bootstrap_indices(len(values), k, seed)
    base_models = [
        fit_model(spec, values[idx], classes[idx], seed=derive_seed(seed, i))
        for i, idx in enumerate(plan.index_sets)
    ]
    if mode == "paper_literal":
        blocks = [predict_proba(m, values) for m in base_models]
    else:
        blocks = [
            _in_bag_cv_block(spec, values, classes, plan.index_sets[i], base_models[i], derive_seed(seed, i, 0x0B))
            for i in range(k)
        ]
    return concat_probability_blocks(blocks), plan, base_models


def fit_bagstacking(spec, meta_spec, X, y, k: int, seed: int, mode: str = "paper_literal") -> BagStackingModel:
    """Bootstrap k base models, then train a meta-learner on their outputs.

    In paper_literal mode every base model predicts on the full original
    training rows to form its meta-feature block; out_of_fold substitutes
    leakage-free predictions for in-bag rows.
    """
    classes = as_classes(y)
    meta_features, plan, base_models = bagstacking_meta_features(spec, X, y, k, seed, mode)
    meta_model = fit_model(meta_spec, meta_features, classes, seed=derive_seed(seed, k))
    return BagStackingModel(
        base_models=base_models,
        meta_model=meta_model,
        plan=plan,
        mode=mode,
        spec=spec,
    )


def predict_bagstacking(model: BagStackingModel, X) -> np.ndarray:
    """Feed each base model's probabilities to the meta-learner: k base passes
    plus one meta pass."""
    values, _ = as_values(X)
    blocks = [predict_proba(m, values) for m in model.base_models]
    return predict_proba(model.meta_model, concat_probability_blocks(blocks))
