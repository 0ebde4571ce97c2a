import numpy as np
import pytest

from ecgemo.synth import SynthDatasetSpec, generate_dataset


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_blobs(seed: int, n: int = 400, sep: float = 3.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([rng.normal(-sep, 1.0, (half, 2)), rng.normal(sep, 1.0, (n - half, 2))])
    y = np.r_[np.zeros(half, int), np.ones(n - half, int)]
    order = rng.permutation(n)
    return X[order], y[order]


@pytest.fixture(scope="session")
def small_table():
    """4 subjects x 2 emotions x 12 epochs, class-dependent heart rate."""
    return generate_dataset(SynthDatasetSpec(n_subjects=4, epochs_per_group=12, seed=3))


def toy_table(n_subjects=6, epochs=12, seed=0, label_signal=0.0, sizes=None):
    """Random feature table with the canonical columns; no signal processing involved.

    ``sizes`` maps (subject, emotion) to a custom epoch count.
    """
    import pandas as pd

    from ecgemo.features import FEATURE_NAMES

    rng = np.random.default_rng(seed)
    rows = []
    for s in range(n_subjects):
        for emotion, label in (("sadness", 0), ("amusement", 1)):
            sid = f"S{s:02d}"
            n = (sizes or {}).get((sid, emotion), epochs)
            for e in range(n):
                values = rng.normal(size=len(FEATURE_NAMES)) + label_signal * label
                rows.append([*values, sid, emotion, label, e])
    return pd.DataFrame(rows, columns=[*FEATURE_NAMES, "subject_id", "emotion", "label", "epoch_index"])
