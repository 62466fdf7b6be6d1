import numpy as np
import pytest

from phimix import EntropySpec

FAMILIES = [
    EntropySpec.shannon(1.0),
    EntropySpec.shannon(0.5),
    EntropySpec.shannon(2.0),
    EntropySpec.quadratic(1.0),
    EntropySpec.quadratic(0.3),
    EntropySpec.tsallis(2.0),
    EntropySpec.tsallis(0.5),
    EntropySpec.tsallis(3.0, 1.5),
]


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(params=FAMILIES, ids=str)
def family(request):
    return request.param
