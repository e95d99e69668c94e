import numpy as np
import pytest

from bagstack import Recording


def make_recording(n, seed=0, subject_id="S000", sample_rate_hz=16.0, labels=None, valid=None):
    rng = np.random.default_rng(seed)
    if labels is None:
        labels = np.zeros((n, 3), dtype=np.uint8)
    if valid is None:
        valid = np.ones(n, dtype=bool)
    return Recording(
        subject_id=subject_id,
        sample_rate_hz=sample_rate_hz,
        acc=rng.normal(size=(n, 3)),
        labels=labels,
        valid=valid,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
