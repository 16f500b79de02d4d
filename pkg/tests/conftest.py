import numpy as np
import pytest

from anchorvote import AnchorBank, ModelConfig, learn_one


def make_trained_bank(config: ModelConfig, examples: int, seed: int,
                      scale: float = 1.0) -> AnchorBank:
    """Train a bank on a seeded random stream with roughly balanced labels."""
    rng = np.random.default_rng(seed)
    bank = AnchorBank(config)
    for _ in range(examples):
        x = rng.normal(scale=scale, size=config.dim)
        learn_one(bank, x, int(rng.integers(0, config.classes)))
    return bank


@pytest.fixture
def small_config():
    return ModelConfig(dim=8, parts=2, classes=3, slots=2)
