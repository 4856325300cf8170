import pytest

from erupoint.body.human_model import build_all_humans
from erupoint.body.pool import generate_pool
from erupoint.data.micro_scenes import generate_micro_benchmark
from erupoint.data.stats import load_lexicons


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: acceptance-scale runs (deselect with -m 'not slow')"
    )


@pytest.fixture(scope="session")
def models():
    return build_all_humans(seed=0)


@pytest.fixture(scope="session")
def pool(models):
    return generate_pool(models, seed=7)


@pytest.fixture(scope="session")
def lexicons():
    return load_lexicons()


@pytest.fixture(scope="session")
def micro_bench(pool):
    return generate_micro_benchmark(40, pool, seed=11)
