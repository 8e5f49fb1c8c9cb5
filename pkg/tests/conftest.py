import numpy as np
import pytest

from phsplit.phmodel import build_oscillator, build_rigid_body


@pytest.fixture(scope="session")
def osc():
    return build_oscillator()[0]


@pytest.fixture(scope="session")
def driven():
    return build_oscillator(driven=True)


@pytest.fixture(scope="session")
def rigid():
    return build_rigid_body()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
