"""Per-sample sliding-window aggregation features over each acceleration axis.

Windows are trailing (causal): the window for sample i covers samples
[max(0, i - w + 1) .. i], so it shrinks at the start of a recording instead
of padding. Standard deviation is the population form (divide by n), which
stays defined for length-1 windows. Windows never span recordings.
"""

from __future__ import annotations

import csv
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import AXES, FeatureMatrix, Recording
from .errors import ConfigError, EmptyInputError

STATISTICS = ("mean", "median", "min", "max", "std")


@dataclass(frozen=True)
class FeatureConfig:
    """Window lengths (seconds), statistics, and alignment for featurization."""

    window_seconds: tuple = (50.0, 5.0)
    statistics: tuple = STATISTICS
    alignment: str = "trailing"

    def __post_init__(self):
        object.__setattr__(self, "window_seconds", tuple(float(w) for w in self.window_seconds))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if not self.window_seconds:
            raise ConfigError("window_seconds must be non-empty")
        if any(w <= 0 for w in self.window_seconds):
            raise ConfigError("window lengths must be positive")
        if len(set(self.window_seconds)) != len(self.window_seconds):
            raise ConfigError("window lengths must be distinct")
        if not self.statistics:
            raise ConfigError("statistics must be non-empty")
        unknown = [s for s in self.statistics if s not in STATISTICS]
        if unknown:
            raise ConfigError(f"unknown statistics {unknown}; choose from {STATISTICS}")
        if len(set(self.statistics)) != len(self.statistics):
            raise ConfigError("duplicate statistics")
        if self.alignment != "trailing":
            raise ConfigError(f"only trailing alignment is supported, got {self.alignment!r}")

    def column_names(self) -> list[str]:
        return [
            f"w{ws:g}s_{axis}_{stat}"
            for ws in self.window_seconds
            for axis in AXES
            for stat in self.statistics
        ]

    def n_features(self) -> int:
        return len(self.window_seconds) * len(AXES) * len(self.statistics)


@dataclass(frozen=True)
class WindowStats:
    mean: float
    median: float
    min: float
    max: float
    std: float


def compute_window_stats(values) -> WindowStats:
    """Aggregate one window: mean, median, min, max, population std."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyInputError("cannot aggregate an empty window")
    s = np.sort(v)
    m = v.size // 2
    median = float(s[m]) if v.size % 2 else float((s[m - 1] + s[m]) / 2)
    mean = float(v.mean())
    std = float(np.sqrt(np.mean((v - mean) ** 2)))
    return WindowStats(mean=mean, median=median, min=float(s[0]), max=float(s[-1]), std=std)


def _rolling_mean_std(x: np.ndarray, w: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(x)
    lengths = np.minimum(np.arange(n) + 1, w)
    # Shift by the first sample to condition the sum-of-squares variance
    # formula; using a causal shift keeps features at i independent of
    # samples after i.
    shift = x[0]
    y = x - shift
    c1 = np.concatenate(([0.0], np.cumsum(y)))
    c2 = np.concatenate(([0.0], np.cumsum(y * y)))
    hi = np.arange(1, n + 1)
    lo = hi - lengths
    s1 = c1[hi] - c1[lo]
    s2 = c2[hi] - c2[lo]
    mean_y = s1 / lengths
    var = np.maximum(s2 / lengths - mean_y**2, 0.0)
    return mean_y + shift, np.sqrt(var)


def _rolling_extreme(x: np.ndarray, w: int, is_min: bool) -> np.ndarray:
    # Monotonic-deque sliding extreme; exact because only comparisons are used.
    n = len(x)
    out = np.empty(n)
    dq: deque = deque()
    for i in range(n):
        v = x[i]
        if is_min:
            while dq and x[dq[-1]] >= v:
                dq.pop()
        else:
            while dq and x[dq[-1]] <= v:
                dq.pop()
        dq.append(i)
        if dq[0] <= i - w:
            dq.popleft()
        out[i] = x[dq[0]]
    return out


def _rolling_median(x: np.ndarray, w: int) -> np.ndarray:
    n = len(x)
    out = np.empty(n)
    window: list[float] = []
    vals = x.tolist()
    for i in range(n):
        if i >= w:
            del window[bisect_left(window, vals[i - w])]
        insort(window, vals[i])
        k = len(window)
        m = k // 2
        out[i] = window[m] if k % 2 else (window[m - 1] + window[m]) / 2
    return out


_ROLLING = {
    "mean": lambda x, w: _rolling_mean_std(x, w)[0],
    "std": lambda x, w: _rolling_mean_std(x, w)[1],
    "min": lambda x, w: _rolling_extreme(x, w, is_min=True),
    "max": lambda x, w: _rolling_extreme(x, w, is_min=False),
    "median": _rolling_median,
}


def window_length_samples(window_seconds: float, sample_rate_hz: float) -> int:
    w = int(round(window_seconds * sample_rate_hz))
    if w < 1:
        raise ConfigError(
            f"window of {window_seconds} s is shorter than one sample at {sample_rate_hz} Hz"
        )
    return w


def extract_window_features(recording: Recording, config: FeatureConfig) -> FeatureMatrix:
    """One feature row per sample: every (window, axis, statistic) combination.

    Column order follows the config's window list, then axis (V, ML, AP),
    then the config's statistic list.
    """
    n = len(recording)
    if n == 0:
        raise EmptyInputError("cannot featurize an empty recording")
    columns = np.empty((n, config.n_features()))
    col = 0
    for ws in config.window_seconds:
        w = window_length_samples(ws, recording.sample_rate_hz)
        for axis_idx in range(len(AXES)):
            x = np.ascontiguousarray(recording.acc[:, axis_idx])
            mean_std = None
            for stat in config.statistics:
                if stat in ("mean", "std"):
                    if mean_std is None:
                        mean_std = _rolling_mean_std(x, w)
                    columns[:, col] = mean_std[0] if stat == "mean" else mean_std[1]
                else:
                    columns[:, col] = _ROLLING[stat](x, w)
                col += 1
    return FeatureMatrix(config.column_names(), columns)


def write_feature_matrix_csv(matrix: FeatureMatrix, stream) -> None:
    """Dump a feature matrix as CSV (used by the CLI's --dump-features)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(matrix.column_names)
    for row in matrix.values:
        writer.writerow([repr(float(v)) for v in row])
