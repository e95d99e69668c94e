"""Recording ingestion, subject-wise splitting, and supervised matrices.

A recording is one subject's lower-back 3-axis acceleration trace sampled at
a fixed rate, with per-sample event labels and a per-sample validity mask.
The on-disk format is one CSV per recording, named ``<subject_id>_<index>.csv``:

    Time,AccV,AccML,AccAP,StartHesitation,Turn,Walking,Valid

``Time`` is the sample index (0, 1, 2, ...), the three indicator columns are
0/1 and mutually exclusive, ``Valid`` is 0/1 or true/false.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInputError,
    LabelConsistencyError,
    ParseError,
    SchemaError,
    SplitInfeasibleError,
)

CSV_HEADER = ["Time", "AccV", "AccML", "AccAP", "StartHesitation", "Turn", "Walking", "Valid"]

AXES = ("V", "ML", "AP")
CLASS_NAMES = ("none", "start_hesitation", "turn", "walking")
EVENT_CLASSES = (1, 2, 3)

_TRUE_STRINGS = {"1", "true", "True", "TRUE"}
_FALSE_STRINGS = {"0", "false", "False", "FALSE"}


@dataclass
class Recording:
    """One subject's acceleration trace with labels and validity mask.

    acc is (n, 3) float64 in axis order V, ML, AP; labels is (n, 3) uint8
    indicators (start_hesitation, turn, walking); valid is (n,) bool.
    """

    subject_id: str
    sample_rate_hz: float
    acc: np.ndarray
    labels: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.acc = np.asarray(self.acc, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.sample_rate_hz <= 0:
            raise SchemaError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        n = len(self.acc)
        if self.acc.shape != (n, 3):
            raise SchemaError(f"acc must be (n, 3), got {self.acc.shape}")
        if self.labels.shape != (n, 3) or len(self.valid) != n:
            raise SchemaError("labels and valid must have the same length as acc")
        if n and int(self.labels.sum(axis=1).max()) > 1:
            bad = int(np.argmax(self.labels.sum(axis=1) > 1))
            raise LabelConsistencyError(f"sample {bad}: more than one event indicator set")

    def __len__(self):
        return len(self.acc)

    @property
    def event_class(self) -> np.ndarray:
        """Per-sample class id: 0 none, 1 start_hesitation, 2 turn, 3 walking."""
        out = np.zeros(len(self), dtype=np.int64)
        for c in EVENT_CLASSES:
            out[self.labels[:, c - 1] == 1] = c
        return out


@dataclass
class Dataset:
    """A collection of recordings with unique subject ids."""

    recordings: list[Recording] = field(default_factory=list)

    def __post_init__(self):
        ids = [r.subject_id for r in self.recordings]
        if len(set(ids)) != len(ids):
            dupes = sorted({s for s in ids if ids.count(s) > 1})
            raise SchemaError(f"duplicate subject ids: {dupes}")

    def __len__(self):
        return len(self.recordings)

    @property
    def subject_ids(self) -> list[str]:
        return [r.subject_id for r in self.recordings]

    @property
    def n_samples(self) -> int:
        return sum(len(r) for r in self.recordings)


@dataclass
class FeatureMatrix:
    """n_rows x d matrix of window-statistic features with ordered column names."""

    column_names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_names):
            raise SchemaError(
                f"values shape {self.values.shape} does not match {len(self.column_names)} columns"
            )
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise SchemaError("feature matrix contains NaN or infinite entries")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class TargetVector:
    """Per-row class ids in {0, 1, 2, 3} plus the validity mask."""

    classes: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.classes.shape != self.valid.shape or self.classes.ndim != 1:
            raise SchemaError("classes and valid must be 1-D arrays of equal length")
        if self.classes.size and (self.classes.min() < 0 or self.classes.max() > 3):
            raise SchemaError("class ids must lie in {0, 1, 2, 3}")

    def __len__(self):
        return len(self.classes)


def _parse_indicator(text: str, column: str, row: int) -> int:
    if text in _TRUE_STRINGS:
        return 1
    if text in _FALSE_STRINGS:
        return 0
    raise ParseError(f"column {column}: expected 0/1, got {text!r}", row=row)


def parse_recording_csv(stream, sample_rate_hz: float, subject_id: str = "") -> Recording:
    """Parse one recording CSV from a byte or text stream.

    Rejects files whose Time column is not the contiguous sequence 0, 1, 2, ...
    and rows where more than one event indicator is set.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if not isinstance(stream, io.TextIOBase):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInputError("empty recording file") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise SchemaError(f"bad header {header!r}, expected {','.join(CSV_HEADER)}")

    acc, labels, valid = [], [], []
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != 8:
            raise ParseError(f"expected 8 cells, got {len(row)}", row=row_no)
        try:
            t = int(row[0])
            axes = [float(row[1]), float(row[2]), float(row[3])]
        except ValueError as exc:
            raise ParseError(str(exc), row=row_no) from None
        if t != len(acc):
            raise ParseError(f"Time {t} breaks contiguity (expected {len(acc)})", row=row_no)
        inds = [_parse_indicator(row[4 + j].strip(), CSV_HEADER[4 + j], row_no) for j in range(3)]
        if sum(inds) > 1:
            raise LabelConsistencyError(f"row {row_no}: more than one event indicator set")
        acc.append(axes)
        labels.append(inds)
        valid.append(bool(_parse_indicator(row[7].strip(), "Valid", row_no)))

    if not acc:
        raise EmptyInputError("recording has a header but no samples")
    return Recording(
        subject_id=subject_id,
        sample_rate_hz=sample_rate_hz,
        acc=np.array(acc),
        labels=np.array(labels, dtype=np.uint8),
        valid=np.array(valid, dtype=bool),
    )


def write_recording_csv(recording: Recording, stream) -> None:
    """Write a recording in the canonical 8-column CSV layout."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i in range(len(recording)):
        writer.writerow(
            [
                i,
                repr(float(recording.acc[i, 0])),
                repr(float(recording.acc[i, 1])),
                repr(float(recording.acc[i, 2])),
                int(recording.labels[i, 0]),
                int(recording.labels[i, 1]),
                int(recording.labels[i, 2]),
                int(recording.valid[i]),
            ]
        )


def load_dataset_dir(data_dir, sample_rate_hz: float) -> Dataset:
    """Load every ``<subject_id>_<index>.csv`` under data_dir, sorted by filename.

    Episode sidecar files (``*.episodes.csv``) are ignored.
    """
    data_dir = Path(data_dir)
    paths = sorted(p for p in data_dir.glob("*.csv") if not p.name.endswith(".episodes.csv"))
    if not paths:
        raise EmptyInputError(f"no recording CSVs under {data_dir}")
    recordings = []
    for path in paths:
        subject_id = path.stem.rsplit("_", 1)[0]
        with open(path, newline="") as fh:
            recordings.append(parse_recording_csv(fh, sample_rate_hz, subject_id=subject_id))
    return Dataset(recordings)


def split_by_subject(dataset: Dataset, holdout_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Partition subjects into disjoint train/validation datasets.

    The validation side receives round(holdout_fraction * n_subjects) subjects,
    clamped to [1, n_subjects - 1]. Deterministic for a fixed seed and
    independent of the recording order in `dataset`.
    """
    if not 0 < holdout_fraction < 1:
        raise SplitInfeasibleError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    n = len(dataset)
    if n < 2:
        raise SplitInfeasibleError("need at least 2 subjects to split by subject")
    n_holdout = min(max(1, round(holdout_fraction * n)), n - 1)
    order = sorted(dataset.subject_ids)
    rng = np.random.default_rng(seed)
    shuffled = [order[i] for i in rng.permutation(n)]
    holdout_ids = set(shuffled[:n_holdout])
    by_id = {r.subject_id: r for r in dataset.recordings}
    train = Dataset([by_id[s] for s in dataset.subject_ids if s not in holdout_ids])
    valid = Dataset([by_id[s] for s in dataset.subject_ids if s in holdout_ids])
    return train, valid


def to_supervised(dataset: Dataset, feature_config) -> tuple[FeatureMatrix, TargetVector]:
    """Featurize every recording and stack into one supervised view.

    Output rows follow recording order; row count equals the total sample
    count. Targets are the class id of the single active indicator (0 when
    no event), and the validity mask is copied through.
    """
    from .features import extract_window_features

    if len(dataset) == 0:
        raise EmptyInputError("cannot featurize an empty dataset")
    blocks = []
    column_names = None
    classes, valid = [], []
    for rec in dataset.recordings:
        fm = extract_window_features(rec, feature_config)
        if column_names is None:
            column_names = fm.column_names
        blocks.append(fm.values)
        classes.append(rec.event_class)
        valid.append(rec.valid)
    X = FeatureMatrix(column_names, np.concatenate(blocks, axis=0))
    y = TargetVector(np.concatenate(classes), np.concatenate(valid))
    return X, y
