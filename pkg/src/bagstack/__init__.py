"""Ensemble toolkit for event detection in accelerometer time series.

Core pieces: windowed feature extraction, native tree / boosted-tree /
logistic learners, bagging / stacking / bagstacking ensembles, a
validity-masked MAP metric, a synthetic data generator, and a benchmark
harness exposed through the ``bagstack`` CLI.
"""

from .data import (
    AXES,
    CLASS_NAMES,
    Dataset,
    FeatureMatrix,
    Recording,
    TargetVector,
    load_dataset_dir,
    parse_recording_csv,
    split_by_subject,
    to_supervised,
    write_recording_csv,
)
from .ensembles import (
    BaggingModel,
    BagStackingModel,
    BootstrapPlan,
    StackingModel,
    bagstacking_meta_features,
    bootstrap_indices,
    derive_seed,
    fit_bagging,
    fit_bagstacking,
    fit_stacking,
    predict_bagging,
    predict_bagstacking,
    predict_stacking,
    stacking_meta_features,
)
from .features import (
    FeatureConfig,
    WindowStats,
    compute_window_stats,
    extract_window_features,
)
from .learners import (
    GbmSpec,
    LogisticSpec,
    TreeSpec,
    fit_gbm,
    fit_logistic,
    fit_model,
    fit_tree,
    make_spec,
    predict_proba,
    softmax_cross_entropy,
)
from .metrics import MapReport, average_precision, map_score
from .persistence import load_model, model_from_text, model_to_text, save_model
from .synth import Episode, SynthConfig, generate_dataset, read_episodes_csv, write_dataset

__version__ = "0.1.0"

__all__ = [
    "AXES",
    "CLASS_NAMES",
    "BaggingModel",
    "BagStackingModel",
    "BootstrapPlan",
    "Dataset",
    "Episode",
    "FeatureConfig",
    "FeatureMatrix",
    "GbmSpec",
    "LogisticSpec",
    "MapReport",
    "Recording",
    "StackingModel",
    "SynthConfig",
    "TargetVector",
    "TreeSpec",
    "WindowStats",
    "average_precision",
    "bagstacking_meta_features",
    "bootstrap_indices",
    "compute_window_stats",
    "derive_seed",
    "extract_window_features",
    "fit_bagging",
    "fit_bagstacking",
    "fit_gbm",
    "fit_logistic",
    "fit_model",
    "fit_stacking",
    "fit_tree",
    "generate_dataset",
    "load_dataset_dir",
    "load_model",
    "make_spec",
    "map_score",
    "model_from_text",
    "model_to_text",
    "parse_recording_csv",
    "predict_bagging",
    "predict_bagstacking",
    "predict_proba",
    "predict_stacking",
    "read_episodes_csv",
    "save_model",
    "softmax_cross_entropy",
    "split_by_subject",
    "stacking_meta_features",
    "to_supervised",
    "write_dataset",
    "write_recording_csv",
]
