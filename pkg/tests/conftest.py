import numpy as np
import pytest

from multileg.gait import GaitSchedule
from multileg.params import default_params


@pytest.fixture(scope="session")
def p6():
    """Default six-module model."""
    return default_params()


@pytest.fixture(scope="session")
def g6():
    """Default wave-gait schedule."""
    return GaitSchedule()


def random_state_arrays(rng: np.random.Generator, nd: int):
    """A generic bent, moving configuration (q, qd) for property tests."""
    q = np.zeros(nd)
    q[0], q[1] = rng.uniform(-2.0, 2.0, size=2)
    q[2] = rng.uniform(-np.pi, np.pi)
    q[3:] = rng.uniform(-0.6, 0.6, size=nd - 3)
    qd = rng.normal(scale=0.3, size=nd)
    return q, qd
