from __future__ import annotations

import numpy as np
import pytest

from transmute.basis import PotentialSpec
from transmute.fit import fit_kernel
from transmute.grid import Grid
from transmute.oracle import tanh_kernel_matrix


def tanh_potential(b: float = 1.0) -> PotentialSpec:
    return PotentialSpec(lambda x: 0.0, np.tanh, b, label="q=tanh(x)")


def rotated_potential() -> PotentialSpec:
    phi = lambda x: x * (x - 2) / 4  # noqa: E731
    return PotentialSpec(
        lambda x: -(x + 1) / 2 * np.cos(2 * phi(x)),
        lambda x: (x + 1) / 2 * np.sin(2 * phi(x)),
        1.0,
        label="rotated",
    )


class CachedReference:
    """Closed-form tanh kernels memoised per point set (each value is a quadrature)."""

    def __init__(self, fn=tanh_kernel_matrix):
        self.fn = fn
        self.cache = {}

    def __call__(self, x, t):
        x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
        key = (x.shape, x.tobytes(), t.tobytes())
        if key not in self.cache:
            self.cache[key] = self.fn(x, t)
        return self.cache[key]


@pytest.fixture(scope="session")
def tanh_pot():
    return tanh_potential()


@pytest.fixture(scope="session")
def grid():
    return Grid(1.0, 2000)


@pytest.fixture(scope="session")
def tanh_fit10(tanh_pot, grid):
    return fit_kernel(tanh_pot, 10, grid)


@pytest.fixture(scope="session")
def tanh_reference():
    return CachedReference()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
