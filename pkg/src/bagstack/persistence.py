"""Versioned text serialization for trained models (format ``bagstack-model v1``).

The file is line-based and self-describing: a header, an optional
featurization config, the learner spec, feature column names, and every
parameter array (floats written with repr, which round-trips float64
exactly). Ensemble files embed their member models as nested blocks.
Bootstrap plans are stored as their defining (n, k, master_seed) triple and
regenerated on load.

Writing the same model twice yields byte-identical files, and a loaded
model predicts bit-identically to the saved one.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .ensembles import (
    BaggingModel,
    BagStackingModel,
    StackingModel,
    bootstrap_indices,
)
from .errors import SchemaError
from .features import FeatureConfig
from .learners import (
    BoostedTree,
    GbmModel,
    GbmSpec,
    LogisticModel,
    LogisticSpec,
    TreeModel,
    TreeSpec,
)

HEADER = "bagstack-model v1"


def _fmt_floats(arr) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(arr).ravel())


def _fmt_ints(arr) -> str:
    return " ".join(str(int(v)) for v in np.asarray(arr).ravel())


def _fmt_spec(spec) -> str:
    pairs = [(f.name, getattr(spec, f.name)) for f in dataclasses.fields(spec)]
    return " ".join(f"{k}={v!r}" for k, v in pairs)


def _parse_spec(cls, text: str):
    kwargs = {}
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    for token in text.split():
        key, _, raw = token.partition("=")
        if key not in types:
            raise SchemaError(f"unknown {cls.__name__} field {key!r}")
        kwargs[key] = int(raw) if types[key] == "int" else float(raw)
    return cls(**kwargs)


def _fmt_columns(columns) -> str:
    if columns is None:
        return "-"
    for name in columns:
        if "," in name or "\n" in name:
            raise SchemaError(f"column name {name!r} cannot be serialized")
    return ",".join(columns)


def _parse_columns(text: str):
    return None if text == "-" else text.split(",")


def _fmt_feature_config(config: FeatureConfig) -> str:
    windows = ",".join(f"{w:g}" for w in config.window_seconds)
    stats = ",".join(config.statistics)
    return f"windows={windows} stats={stats} alignment={config.alignment}"


def _parse_feature_config(text: str) -> FeatureConfig:
    fields = dict(token.split("=", 1) for token in text.split())
    return FeatureConfig(
        window_seconds=tuple(float(w) for w in fields["windows"].split(",")),
        statistics=tuple(fields["stats"].split(",")),
        alignment=fields.get("alignment", "trailing"),
    )


class _Cursor:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise SchemaError("unexpected end of model file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def peek(self) -> str | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def take(self, key: str) -> str:
        line = self.next()
        if not line.startswith(key + " ") and line != key:
            raise SchemaError(f"expected {key!r}, got {line!r}")
        return line[len(key) :].strip()


# --- single learners -------------------------------------------------------


def _tree_arrays_lines(feature, threshold, left, right) -> list:
    return [
        "feature " + _fmt_ints(feature),
        "threshold " + _fmt_floats(threshold),
        "left " + _fmt_ints(left),
        "right " + _fmt_ints(right),
    ]


def _read_int_array(cur, key):
    text = cur.take(key)
    return np.array([int(t) for t in text.split()], dtype=np.int64)


def _read_float_array(cur, key):
    text = cur.take(key)
    return np.array([float(t) for t in text.split()])


def _learner_lines(model) -> list:
    lines = [f"kind {model.spec.kind}"]
    lines.append("columns " + _fmt_columns(model.column_names))
    lines.append("spec " + _fmt_spec(model.spec))
    lines.append(f"n_features {model.n_features}")
    if isinstance(model, TreeModel):
        lines += _tree_arrays_lines(model.feature, model.threshold, model.left, model.right)
        lines.append("leaf_dist " + _fmt_floats(model.leaf_dist))
    elif isinstance(model, GbmModel):
        lines.append("init_scores " + _fmt_floats(model.init_scores))
        lines.append(f"rounds {len(model.trees)}")
        for round_trees in model.trees:
            for tree in round_trees:
                lines.append("tree")
                lines += _tree_arrays_lines(tree.feature, tree.threshold, tree.left, tree.right)
                lines.append("value " + _fmt_floats(tree.value))
    elif isinstance(model, LogisticModel):
        lines.append("weights " + _fmt_floats(model.weights))
        lines.append("bias " + _fmt_floats(model.bias))
    else:
        raise SchemaError(f"cannot serialize {type(model).__name__} as a learner")
    return lines


def _read_learner(cur):
    kind = cur.take("kind")
    columns = _parse_columns(cur.take("columns"))
    spec_text = cur.take("spec")
    n_features = int(cur.take("n_features"))
    if kind == "tree":
        spec = _parse_spec(TreeSpec, spec_text)
        feature = _read_int_array(cur, "feature")
        threshold = _read_float_array(cur, "threshold")
        left = _read_int_array(cur, "left")
        right = _read_int_array(cur, "right")
        leaf_dist = _read_float_array(cur, "leaf_dist").reshape(len(feature), 4)
        return TreeModel(spec, columns, n_features, feature, threshold, left, right, leaf_dist)
    if kind == "gbm":
        spec = _parse_spec(GbmSpec, spec_text)
        init_scores = _read_float_array(cur, "init_scores")
        rounds = int(cur.take("rounds"))
        trees = []
        for _ in range(rounds):
            round_trees = []
            for _ in range(4):
                cur.take("tree")
                round_trees.append(
                    BoostedTree(
                        feature=_read_int_array(cur, "feature"),
                        threshold=_read_float_array(cur, "threshold"),
                        left=_read_int_array(cur, "left"),
                        right=_read_int_array(cur, "right"),
                        value=_read_float_array(cur, "value"),
                    )
                )
            trees.append(round_trees)
        return GbmModel(spec, columns, n_features, init_scores, trees)
    if kind == "logistic":
        spec = _parse_spec(LogisticSpec, spec_text)
        weights = _read_float_array(cur, "weights").reshape(n_features, 4)
        bias = _read_float_array(cur, "bias")
        return LogisticModel(spec, columns, n_features, weights, bias)
    raise SchemaError(f"unknown model kind {kind!r}")


# --- ensembles -------------------------------------------------------------


def _nested_lines(tag: str, model) -> list:
    return [f"begin {tag}", HEADER, *_learner_lines(model), f"end {tag}"]


def _read_nested(cur, tag: str):
    cur.take(f"begin {tag}")
    inner = []
    while True:
        line = cur.next()
        if line == f"end {tag}":
            break
        inner.append(line)
    inner_cur = _Cursor(inner)
    if inner_cur.take("bagstack-model") != "v1":
        raise SchemaError("nested block is not a v1 model")
    return _read_learner(inner_cur)


def model_to_text(model, feature_config: FeatureConfig | None = None) -> str:
    """Serialize any trained model (learner or ensemble) to the v1 text format."""
    lines = [HEADER]
    if feature_config is None:
        feature_config = getattr(model, "feature_config", None)
    if feature_config is not None:
        lines.append("feature_config " + _fmt_feature_config(feature_config))
    if isinstance(model, BaggingModel):
        lines.append("kind bagging")
        plan = model.plan
        lines.append(f"plan {plan.n} {plan.k} {plan.master_seed}")
        lines.append(f"members {len(model.models)}")
        for member in model.models:
            lines += _nested_lines("member", member)
    elif isinstance(model, StackingModel):
        lines.append("kind stacking")
        lines.append(f"folds {model.folds}")
        lines.append(f"seed {model.seed}")
        lines.append(f"members {len(model.base_models)}")
        for member in model.base_models:
            lines += _nested_lines("member", member)
        lines += _nested_lines("meta", model.meta_model)
    elif isinstance(model, BagStackingModel):
        lines.append("kind bagstacking")
        lines.append(f"mode {model.mode}")
        plan = model.plan
        lines.append(f"plan {plan.n} {plan.k} {plan.master_seed}")
        lines.append(f"members {len(model.base_models)}")
        for member in model.base_models:
            lines += _nested_lines("member", member)
        lines += _nested_lines("meta", model.meta_model)
    else:
        lines += _learner_lines(model)
    return "\n".join(lines) + "\n"


def model_from_text(text: str):
    """Parse a v1 model file; returns (model, feature_config or None)."""
    cur = _Cursor(text.splitlines())
    if cur.take("bagstack-model") != "v1":
        raise SchemaError("not a bagstack-model v1 file")
    feature_config = None
    if cur.peek() is not None and cur.peek().startswith("feature_config "):
        feature_config = _parse_feature_config(cur.take("feature_config"))
    kind_line = cur.peek()
    if kind_line is None:
        raise SchemaError("truncated model file")
    kind = kind_line.split(" ", 1)[1] if " " in kind_line else ""
    if kind == "bagging":
        cur.take("kind")
        n, k, master_seed = (int(t) for t in cur.take("plan").split())
        members = int(cur.take("members"))
        models = [_read_nested(cur, "member") for _ in range(members)]
        model = BaggingModel(models=models, plan=bootstrap_indices(n, k, master_seed))
    elif kind == "stacking":
        cur.take("kind")
        folds = int(cur.take("folds"))
        seed = int(cur.take("seed"))
        members = int(cur.take("members"))
        base_models = [_read_nested(cur, "member") for _ in range(members)]
        meta = _read_nested(cur, "meta")
        model = StackingModel(base_models=base_models, meta_model=meta, folds=folds, seed=seed)
    elif kind == "bagstacking":
        cur.take("kind")
        mode = cur.take("mode")
        n, k, master_seed = (int(t) for t in cur.take("plan").split())
        members = int(cur.take("members"))
        base_models = [_read_nested(cur, "member") for _ in range(members)]
        meta = _read_nested(cur, "meta")
        model = BagStackingModel(
            base_models=base_models,
            meta_model=meta,
            plan=bootstrap_indices(n, k, master_seed),
            mode=mode,
            feature_config=feature_config,
        )
    else:
        model = _read_learner(cur)
    return model, feature_config


def save_model(model, path, feature_config: FeatureConfig | None = None) -> None:
    Path(path).write_text(model_to_text(model, feature_config))


def load_model(path):
    """Load a model file; returns (model, feature_config or None)."""
    return model_from_text(Path(path).read_text())
