import numpy as np
import pytest

from tsallis_fin.fin import FinTrainConfig, SyntheticDatasetSpec, train_fin

SMALL_SPEC = SyntheticDatasetSpec(n_samples=3000, signal_length=8, seed=3)
SMALL_CONFIG = FinTrainConfig(hidden=(16, 16), max_epochs=15, seed=3)


@pytest.fixture(scope="session")
def small_fin():
    model, hist = train_fin(SMALL_CONFIG, SMALL_SPEC)
    return model


@pytest.fixture(scope="session")
def default_fin_run():
    """The default FIN (length 32, 5e4 samples, seed 0); trained once per session."""
    return train_fin(FinTrainConfig(), SyntheticDatasetSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
