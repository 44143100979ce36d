import numpy as np
import pytest

from specflow.models import BasedSpace, NormSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def line():
    return BasedSpace.line(0.0)


@pytest.fixture
def circle():
    return BasedSpace.circle(0.0)


@pytest.fixture
def rho2():
    return NormSpec.schatten(2.0)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
