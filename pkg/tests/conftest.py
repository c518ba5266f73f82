import math

import numpy as np
import pytest

PI4 = math.pi / 4


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
