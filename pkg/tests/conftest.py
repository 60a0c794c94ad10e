import numpy as np
import pytest

from copula_markov import (
    GridCopula,
    IndependenceCopula,
    LowerFrechetCopula,
    UpperFrechetCopula,
)

# 3x3 doubly stochastic matrix whose checkerboard copula is stochastically
# increasing in the first component but not in the second; the workhorse
# example for most grid tests
CHECKER3 = np.array(
    [
        [2 / 3, 0.0, 1 / 3],
        [1 / 3, 1 / 3, 1 / 3],
        [0.0, 2 / 3, 1 / 3],
    ]
)


def random_doubly_stochastic(rng, n, n_perms=None):
    """Convex combination of random permutation matrices."""
    k = n_perms if n_perms is not None else max(2, n)
    weights = rng.dirichlet(np.ones(k))
    m = np.zeros((n, n))
    for w in weights:
        m[np.arange(n), rng.permutation(n)] += w
    return m


@pytest.fixture
def checker3():
    return GridCopula(CHECKER3)


@pytest.fixture
def pi():
    return IndependenceCopula()


@pytest.fixture
def upper():
    return UpperFrechetCopula()


@pytest.fixture
def lower():
    return LowerFrechetCopula()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
