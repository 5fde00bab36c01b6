import numpy as np
import pytest

from iflab import fixtures


@pytest.fixture
def cantor():
    return fixtures.cantor()


@pytest.fixture
def triangle():
    return fixtures.triangle()


@pytest.fixture
def injective():
    return fixtures.injective()


@pytest.fixture
def mw():
    return fixtures.mauldin_williams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
