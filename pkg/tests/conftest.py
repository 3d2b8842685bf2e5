import numpy as np
import pytest

from smogcast.datapipe.synth import synth_advection
from smogcast.datapipe.windows import WindowedDataset
from smogcast.models.config import ArchitectureConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_arch():
    """Two ConvLSTM layers of 2 and 3 filters over 2 input channels"""
    return ArchitectureConfig(in_channels=2, filters=[2, 3])


@pytest.fixture
def tiny_dataset(rng):
    """Four random 1-step windows on a 5x5 grid with 2 channels"""
    n = 4
    return WindowedDataset(
        samples=rng.random((n, 1, 5, 5, 2)).astype(np.float32),
        targets=rng.random((n, 1, 5, 5, 1)).astype(np.float32),
        last_observed=rng.random((n, 1, 5, 5, 1)).astype(np.float32),
        sample_dates=[19358 + 5 * i for i in range(n)],
        feature_names=["SO2", "NO2"],
    )


@pytest.fixture
def synth_pair():
    """8x8 synthetic predictors and target, 120 frames ending 2023-12-31"""
    return synth_advection(8, 8, 120, seed=7)
