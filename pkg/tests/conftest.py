import numpy as np
import pytest


def random_hermitian(rng, n, scale=1.0):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (M + M.conj().T)


def random_cvec(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def direct_quad(A, b, x):
    """x^H A x - 2 Re(b^H x) by explicit double loop."""
    n = len(x)
    s = 0j
    for j in range(n):
        for k in range(n):
            s += np.conj(x[j]) * A[j, k] * x[k]
    lin = 0j
    for j in range(n):
        lin += np.conj(b[j]) * x[j]
    return s.real - 2.0 * lin.real


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
