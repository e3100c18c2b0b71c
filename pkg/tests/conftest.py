import numpy as np
import pytest

from dfsim import enumerate_basis


@pytest.fixture(scope="session")
def basis5():
    return enumerate_basis(5)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250809)


def random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2.0


def random_density(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real
