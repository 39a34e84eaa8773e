import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kqkp import generator


def make_instance(n: int, density: int = 50, seed: int = 0):
    return generator.generate(generator.GenSpec(n=n, density_percent=density, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
