"""Shared oracles for the test suite.

Everything here is an independent dense-numpy reimplementation of the bits
under test, built from factorials and explicit matrices, so agreement is
evidence rather than tautology.
"""

import math

import numpy as np
import pytest


def dense_ladder(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation / creation matrices built element by element."""
    a = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return a, a.conj().T


def dense_coherent(alpha: complex, n: int) -> np.ndarray:
    """Coherent amplitudes straight from the defining series."""
    amps = np.array(
        [alpha**k / math.sqrt(math.factorial(k)) for k in range(n)], dtype=complex
    )
    amps *= math.exp(-0.5 * abs(alpha) ** 2)
    return amps


def dense_displacement(alpha: complex, n: int) -> np.ndarray:
    from scipy.linalg import expm

    a, adag = dense_ladder(n)
    return expm(alpha * adag - np.conj(alpha) * a)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def random_density(rng: np.random.Generator, dim: int, rank: int = 3) -> np.ndarray:
    """Random rank-limited density matrix with decaying level population."""
    decay = np.exp(-0.25 * np.arange(dim))
    vecs = (rng.normal(size=(rank, dim)) + 1j * rng.normal(size=(rank, dim))) * decay
    weights = rng.random(rank)
    weights /= weights.sum()
    mat = sum(
        w * np.outer(v, v.conj()) / np.vdot(v, v).real for w, v in zip(weights, vecs)
    )
    return 0.5 * (mat + mat.conj().T)
