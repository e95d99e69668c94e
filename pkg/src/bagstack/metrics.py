"""Average precision per event class and their mean, over valid samples only.

Ties are handled atomically: rows with exactly equal scores form one block,
and precision/recall are evaluated only after the whole block, which makes
the result independent of row order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CLASS_NAMES, EVENT_CLASSES, TargetVector
from .errors import EmptyInputError, InvalidScoreError, NoPositivesError, ShapeError

EVENT_CLASS_NAMES = CLASS_NAMES[1:]

MAP_CSV_HEADER = "map,ap_sh,ap_turn,ap_walk,counted_classes,n_valid_rows"


def average_precision(scores, positives) -> float | None:
    """Tie-aware average precision; None when there are no positives."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.shape != positives.shape or scores.ndim != 1:
        raise ShapeError(f"scores {scores.shape} and positives {positives.shape} must match")
    if np.isnan(scores).any():
        raise InvalidScoreError("NaN confidence score")
    n_pos = int(positives.sum())
    if n_pos == 0:
        return None

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    hits = positives[order].astype(np.int64)
    is_block_end = np.empty(len(s), dtype=bool)
    is_block_end[:-1] = s[:-1] != s[1:]
    is_block_end[-1] = True

    cum_tp = np.cumsum(hits)
    tp_end = cum_tp[is_block_end]
    n_end = np.flatnonzero(is_block_end) + 1
    recall_gain = np.diff(tp_end, prepend=0) / n_pos
    precision_end = tp_end / n_end
    return float(np.sum(recall_gain * precision_end))


@dataclass
class MapReport:
    """Per-class average precision over valid rows, and the mean of the defined ones."""

    per_class_ap: dict
    map: float
    counted_classes: int
    n_valid_rows: int

    def to_text(self) -> str:
        lines = [f"map {self.map!r}"]
        for name in EVENT_CLASS_NAMES:
            ap = self.per_class_ap[name]
            lines.append(f"ap_{name} {'undefined' if ap is None else repr(ap)}")
        lines.append(f"counted_classes {self.counted_classes}")
        lines.append(f"n_valid_rows {self.n_valid_rows}")
        return "\n".join(lines) + "\n"

    def to_csv_row(self) -> str:
        cells = [repr(self.map)]
        for name in EVENT_CLASS_NAMES:
            ap = self.per_class_ap[name]
            cells.append("" if ap is None else repr(ap))
        cells.extend([str(self.counted_classes), str(self.n_valid_rows)])
        return ",".join(cells)


def map_score(proba, targets: TargetVector) -> MapReport:
    """MAP over the three event classes, ignoring rows with valid=False.

    Classes with zero valid positives are reported as undefined and excluded
    from the mean; counted_classes records the denominator actually used.
    """
    proba = np.asarray(proba, dtype=np.float64)
    if proba.ndim != 2 or proba.shape[1] != 4:
        raise ShapeError(f"probability matrix must be (n, 4), got {proba.shape}")
    if proba.shape[0] != len(targets):
        raise ShapeError(f"{proba.shape[0]} probability rows vs {len(targets)} targets")
    keep = targets.valid
    if not keep.any():
        raise EmptyInputError("no valid rows to evaluate")
    proba = proba[keep]
    classes = targets.classes[keep]

    per_class_ap = {}
    defined = []
    for c, name in zip(EVENT_CLASSES, EVENT_CLASS_NAMES):
        ap = average_precision(proba[:, c], classes == c)
        per_class_ap[name] = ap
        if ap is not None:
            defined.append(ap)
    if not defined:
        raise NoPositivesError("all three event classes have zero valid positives")
    return MapReport(
        per_class_ap=per_class_ap,
        map=float(np.mean(defined)),
        counted_classes=len(defined),
        n_valid_rows=int(keep.sum()),
    )
