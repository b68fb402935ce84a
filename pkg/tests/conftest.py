import numpy as np
import pytest

from rggm.graph import make_path
from rggm.model_params import ModelParams


@pytest.fixture
def path3():
    return make_path(3)


@pytest.fixture
def params11():
    return ModelParams(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
