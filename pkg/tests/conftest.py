import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cqexp.channels import CQChannel
from cqexp.converse import build_symmetric

settings.register_profile("cqexp", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cqexp")


def rand_density(d, rng, rank=None):
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def qubit_channel():
    # binary input, non-commuting full-rank outputs
    return CQChannel([np.array([[0.9, 0.05], [0.05, 0.1]]),
                      np.array([[0.3, 0.2], [0.2, 0.7]])], name="qubit")


@pytest.fixture(scope="session")
def pauli_channel():
    X = np.array([[0, 1], [1, 0]])
    return build_symmetric(np.array([[0.8, 0.25], [0.25, 0.2]]), X, 2)


@pytest.fixture(scope="session")
def diag_channel():
    return CQChannel([np.diag([0.8, 0.2]), np.diag([0.3, 0.7])], name="bac")
