"""Deterministic generator of gait-like accelerometer recordings with
ground-truth event episodes.

Each subject gets sinusoidal baseline gait (subject-specific frequency,
per-axis amplitude jitter) plus Gaussian noise. Episodes are non-overlapping
intervals whose class alters the signal:

* start_hesitation: amplitude collapse on all axes plus a low-amplitude
  3-8 Hz tremor on the AP axis,
* turn: ML amplitude gain and phase drift,
* walking: V amplitude gain.

Class signatures are calibrated so that short (5 s) and long (50 s) windows
carry complementary information and so that a default boosted model learns
the task without saturating it. The generator is a test instrument, not a
physiological model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import CLASS_NAMES, Dataset, Recording, write_recording_csv
from .ensembles import derive_seed
from .errors import ConfigError, ParseError, SchemaError

MIN_EPISODE_SECONDS = 2.0
MAX_EPISODE_SECONDS = 15.0

_BASE_AMPLITUDE = (1.0, 0.6, 0.8)  # V, ML, AP
_COLLAPSE_FACTOR = 0.25
_TREMOR_AMPLITUDE = 0.35
_TURN_ML_GAIN = 2.0
_WALK_V_GAIN = 1.5


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 10
    seconds_per_subject: float = 60.0
    sample_rate_hz: float = 128.0
    episode_rate_per_minute: float = 1.5
    class_mix: tuple = (1.0, 1.0, 1.0)
    noise_sigma: float = 0.3
    invalid_fraction: float = 0.05
    gait_freq_range: tuple = (0.8, 2.2)

    def __post_init__(self):
        if self.n_subjects < 1:
            raise ConfigError("n_subjects must be >= 1")
        if self.seconds_per_subject <= 0 or self.sample_rate_hz <= 0:
            raise ConfigError("durations and sample rate must be positive")
        if self.episode_rate_per_minute < 0:
            raise ConfigError("episode_rate_per_minute must be >= 0")
        if len(self.class_mix) != 3 or any(w < 0 for w in self.class_mix) or sum(self.class_mix) == 0:
            raise ConfigError("class_mix must be 3 nonnegative weights with positive sum")
        if not 0 <= self.invalid_fraction < 1:
            raise ConfigError("invalid_fraction must be in [0, 1)")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        lo, hi = self.gait_freq_range
        if not 0 < lo <= hi:
            raise ConfigError("gait_freq_range must be positive and ordered")
        if self.episode_rate_per_minute > 0 and self.seconds_per_subject < MIN_EPISODE_SECONDS:
            raise ConfigError(
                f"episodes need at least {MIN_EPISODE_SECONDS} s but recordings last "
                f"{self.seconds_per_subject} s"
            )


@dataclass(frozen=True)
class Episode:
    """Ground-truth event interval; end_index is exclusive."""

    class_id: int  # 1 start_hesitation, 2 turn, 3 walking
    start_index: int
    end_index: int


def _place_episodes(rng, config: SynthConfig) -> list:
    if config.episode_rate_per_minute == 0:
        return []
    dur_max = min(MAX_EPISODE_SECONDS, config.seconds_per_subject)
    mean_duration = (MIN_EPISODE_SECONDS + dur_max) / 2
    mean_gap = max(60.0 / config.episode_rate_per_minute - mean_duration, 0.5)
    mix = np.asarray(config.class_mix, dtype=np.float64)
    mix = mix / mix.sum()
    rate = config.sample_rate_hz
    episodes = []
    pos = 0.0
    while True:
        gap = rng.uniform(0.5 * mean_gap, 1.5 * mean_gap)
        duration = rng.uniform(MIN_EPISODE_SECONDS, dur_max)
        class_id = int(rng.choice(3, p=mix)) + 1
        start, end = pos + gap, pos + gap + duration
        if end > config.seconds_per_subject:
            break
        episodes.append(Episode(class_id, int(round(start * rate)), int(round(end * rate))))
        pos = end
    return episodes


def _generate_recording(subject_id: str, rng, config: SynthConfig) -> tuple:
    n = int(round(config.seconds_per_subject * config.sample_rate_hz))
    t = np.arange(n) / config.sample_rate_hz
    freq = rng.uniform(*config.gait_freq_range)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    amplitudes = np.array(_BASE_AMPLITUDE) * rng.uniform(0.9, 1.1, size=3)

    signal = np.empty((n, 3))
    for a in range(3):
        signal[:, a] = amplitudes[a] * np.sin(2 * np.pi * freq * t + phases[a])

    episodes = _place_episodes(rng, config)
    labels = np.zeros((n, 3), dtype=np.uint8)
    for ep in episodes:
        sl = slice(ep.start_index, ep.end_index)
        ts = t[sl]
        if ep.class_id == 1:
            for a in range(3):
                signal[sl, a] = (
                    _COLLAPSE_FACTOR * amplitudes[a] * np.sin(2 * np.pi * freq * ts + phases[a])
                )
            tremor_freq = rng.uniform(3.0, 8.0)
            tremor_phase = rng.uniform(0, 2 * np.pi)
            signal[sl, 2] += _TREMOR_AMPLITUDE * np.sin(2 * np.pi * tremor_freq * ts + tremor_phase)
        elif ep.class_id == 2:
            drift = rng.uniform(2.0, 5.0)
            signal[sl, 1] = (
                _TURN_ML_GAIN
                * amplitudes[1]
                * np.sin(2 * np.pi * freq * ts + phases[1] + drift * (ts - ts[0]))
            )
        else:
            signal[sl, 0] = _WALK_V_GAIN * amplitudes[0] * np.sin(2 * np.pi * freq * ts + phases[0])
        labels[sl, ep.class_id - 1] = 1

    noise = rng.normal(0.0, config.noise_sigma, size=(n, 3))
    valid = rng.random(n) >= config.invalid_fraction
    rec = Recording(
        subject_id=subject_id,
        sample_rate_hz=config.sample_rate_hz,
        acc=signal + noise,
        labels=labels,
        valid=valid,
    )
    return rec, episodes


def generate_dataset(config: SynthConfig, seed: int) -> tuple[Dataset, dict]:
    """Generate one recording per subject; returns (dataset, episodes-by-subject).

    Fully deterministic given (config, seed); per-subject streams are derived
    from the master seed so subjects are independent of generation order.
    """
    recordings = []
    episodes = {}
    for i in range(config.n_subjects):
        subject_id = f"S{i:03d}"
        rng = np.random.default_rng(derive_seed(seed, i))
        rec, eps = _generate_recording(subject_id, rng, config)
        recordings.append(rec)
        episodes[subject_id] = eps
    return Dataset(recordings), episodes


def write_dataset(dataset: Dataset, episodes: dict, out_dir) -> None:
    """Write ``<subject>_0.csv`` recordings plus ``<subject>.episodes.csv`` sidecars."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in dataset.recordings:
        with open(out_dir / f"{rec.subject_id}_0.csv", "w", newline="") as fh:
            write_recording_csv(rec, fh)
        with open(out_dir / f"{rec.subject_id}.episodes.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["class", "start_index", "end_index"])
            for ep in episodes.get(rec.subject_id, []):
                writer.writerow([CLASS_NAMES[ep.class_id], ep.start_index, ep.end_index])


def read_episodes_csv(path) -> list:
    """Parse a ground-truth sidecar written by write_dataset."""
    episodes = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["class", "start_index", "end_index"]:
            raise SchemaError(f"bad episodes header {header!r}")
        for row_no, row in enumerate(reader, start=1):
            if row[0] not in CLASS_NAMES[1:]:
                raise ParseError(f"unknown class {row[0]!r}", row=row_no)
            episodes.append(Episode(CLASS_NAMES.index(row[0]), int(row[1]), int(row[2])))
    return episodes
