"""Shared helpers: brute-force oracles and channel shortcuts."""

import numpy as np
import pytest

from polarflip.code import PolarCodeSpec, construct_code
from polarflip.sc import modulate


def kronecker_generator(n: int) -> np.ndarray:
    """G^{(x)n} built by explicit Kronecker products (independent oracle)."""
    kernel = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        g = np.kron(g, kernel)
    return g


def brute_force_transform(u) -> np.ndarray:
    """u G^{(x)n} over GF(2) via the dense generator matrix."""
    u = np.asarray(u, dtype=np.uint8)
    n = int(np.log2(u.shape[0]))
    return (u @ kronecker_generator(n)) % 2


def noiseless_llrs(codeword, magnitude: float = 40.0) -> np.ndarray:
    """Channel LLRs of an essentially noise-free BPSK transmission."""
    return modulate(codeword) * magnitude


@pytest.fixture(scope="session")
def pc8_5() -> PolarCodeSpec:
    """The small reference code with frozen set {0, 1, 2}."""
    return construct_code(8, 5, 0, 2.5)


@pytest.fixture(scope="session")
def pc1024_170() -> PolarCodeSpec:
    return construct_code(1024, 170, 7, 2.5)
