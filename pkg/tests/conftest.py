import numpy as np
import pytest

from pingpong import channels, qlin


def random_channel(rng: np.random.Generator, n_kraus: int = 3) -> channels.QuantumChannel:
    """Random qubit channel: Kraus operators cut from a random 2n x 2 isometry."""
    g = rng.normal(size=(2 * n_kraus, 2)) + 1j * rng.normal(size=(2 * n_kraus, 2))
    q, _ = np.linalg.qr(g)
    return channels.QuantumChannel([q[2 * i : 2 * i + 2, :] for i in range(n_kraus)])


def random_density(rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ qlin.dagger(g)
    return rho / np.trace(rho)


def assert_density(rho, tol=1e-9):
    rho = np.asarray(rho)
    assert np.max(np.abs(rho - rho.conj().T)) <= tol
    assert abs(np.trace(rho) - 1) <= tol
    assert np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -tol


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
