import pytest

from erupoint.fusion.features import synthetic_example
from erupoint.fusion.model import build_model

TINY = dict(hidden_size=8, vocab_size=64, embed_dim=8, n_centroids=8)


@pytest.fixture
def tiny_model():
    return build_model(seed=0, **TINY)


@pytest.fixture
def tiny_example(tiny_model):
    return synthetic_example(
        tiny_model, seed=1, n_proposals=4, n_tokens=5, n_points=96
    )
