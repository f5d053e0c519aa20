import math

import numpy as np
import pytest

from etmicrogrid.config import load_preset
from etmicrogrid.graph import CommGraph, ring_graph

OMEGA_REF = 2 * math.pi * 50.0
RING_L = np.array([[1, 0, 0, -1], [-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]], dtype=float)


@pytest.fixture
def ring() -> CommGraph:
    return ring_graph(4)


@pytest.fixture(scope="session")
def case1():
    return load_preset("case1")


@pytest.fixture(scope="session")
def case3():
    return load_preset("case3")


def random_strong_digraph(rng: np.random.Generator, n: int, extra: float = 0.3) -> np.ndarray:
    """Random positive weights on a shuffled Hamiltonian cycle plus extra edges,
    so the result is always strongly connected."""
    a = np.zeros((n, n))
    perm = rng.permutation(n)
    for k in range(n):
        if n > 1:
            a[perm[(k + 1) % n], perm[k]] = rng.uniform(0.2, 3.0)
    mask = (rng.random((n, n)) < extra) & ~np.eye(n, dtype=bool)
    a[mask] = rng.uniform(0.2, 3.0, size=mask.sum())
    return a
