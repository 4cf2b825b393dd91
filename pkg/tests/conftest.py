import numpy as np
import pytest

from ergotrope.arithmetic import Frequency


@pytest.fixture(scope="session")
def golden():
    return Frequency.golden()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def free_chain(n, offset=0):
    from ergotrope.linalg import SymTridiag

    return SymTridiag(np.zeros(n), np.ones(max(n - 1, 0)), offset)


def random_tridiag(rng, n, offset=0, scale=3.0):
    from ergotrope.linalg import SymTridiag

    return SymTridiag(rng.uniform(-scale, scale, n), rng.uniform(0.5, 1.5, n - 1) * rng.choice([-1, 1], n - 1), offset)
