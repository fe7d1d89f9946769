import numpy as np
import pytest

from ptsturm.assembly import pencil_from_matrices


def crypto_pencil(seed=0, blocks=(1.0, 2.0, 0.5), size=2):
    """Non-Hermitian pencil with a known positive definite metric.

    B repeats each weight ``size`` times and Theta is block diagonal on those
    repeats, so Theta commutes with B.  With K Hermitian, A = Theta^-1 K obeys
    A^H Theta = Theta A and the spectrum is real.
    """
    rng = np.random.default_rng(seed)
    n = size * len(blocks)
    w = np.repeat(np.asarray(blocks, dtype=float), size)
    theta = np.zeros((n, n), dtype=complex)
    for b in range(len(blocks)):
        g = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        sl = slice(b * size, (b + 1) * size)
        theta[sl, sl] = g @ g.conj().T + size * np.eye(size)
    k = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    k = k + k.conj().T
    a = np.linalg.solve(theta, k)
    return pencil_from_matrices(a, w), theta


@pytest.fixture
def crypto():
    return crypto_pencil()
