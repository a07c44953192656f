import numpy as np
import pytest

from hardy_sobolev.grid import GridDomain, GridFunction


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cube8():
    return GridDomain.box([0.0] * 3, [1.0] * 3, [8, 8, 8])


def random_function(domain: GridDomain, rng, ties: bool = False) -> GridFunction:
    v = rng.random(domain.cells)
    if ties:
        v = np.round(v * 5) / 5
    return GridFunction(domain, v)
