"""Uniform grids on [0, b], cumulative quadrature and local interpolation.

Sampled functions are plain numpy arrays whose first axis runs over the grid
nodes; any trailing shape (vectors, 2x2 matrices, stacks of them) is carried
along untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation

DEFAULT_M = 2000


@dataclass(frozen=True)
class Grid:
    """Uniform nodes ``x_i = i*b/M``, ``i = 0..M``."""

    b: float
    M: int = DEFAULT_M

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if self.M < 4:
            raise ValueError(f"need at least 5 nodes, got M={self.M}")

    @property
    def h(self) -> float:
        return self.b / self.M

    @property
    def x(self) -> np.ndarray:
        x = np.arange(self.M + 1) * (self.b / self.M)
        x[-1] = self.b
        return x

    def __len__(self):
        return self.M + 1

    def integrate(self, values):
        """Definite integral over ``[0, b]``."""
        return cumint(self, values)[-1]

    def weights(self) -> np.ndarray:
        """Quadrature weights reproducing ``cumint(values)[-1]``.

        Composite Simpson for even ``M``; Simpson up to ``M - 3`` plus a 3/8
        panel for odd ``M``.
        """
        M, h = self.M, self.h
        w = np.zeros(M + 1)
        simpson_end = M if M % 2 == 0 else M - 3
        if simpson_end > 0:
            w[0:simpson_end + 1:2] += 2.0 * h / 3.0
            w[1:simpson_end:2] += 4.0 * h / 3.0
            w[0] -= h / 3.0
            w[simpson_end] -= h / 3.0
        if M % 2:
            w[M - 3:M + 1] += (3.0 * h / 8.0) * np.array([1.0, 3.0, 3.0, 1.0])
        return w


def _check(grid: Grid, values) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != grid.M + 1:
        raise ValueError(f"sample length {values.shape[0]} does not match grid ({grid.M + 1} nodes)")
    return values


def cumint(grid: Grid, values) -> np.ndarray:
    """Samples of ``int_0^{x_i} f(s) ds`` with fourth-order accuracy at every node.

    Even prefixes are composite Simpson; odd prefixes ``i >= 3`` add a 3/8
    panel on ``[x_{i-3}, x_i]`` to the Simpson value at ``i - 3``; ``i = 1``
    uses the cubic through the first four nodes.
    """
    f = _check(grid, values)
    h = grid.h
    M = grid.M
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    pairs = (h / 3.0) * (f[0:M - 1:2] + 4.0 * f[1:M:2] + f[2:M + 1:2])
    out[2::2] = np.cumsum(pairs, axis=0)
    out[1] = (h / 24.0) * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    odd = np.arange(3, M + 1, 2)
    if odd.size:
        out[odd] = out[odd - 3] + (3.0 * h / 8.0) * (
            f[odd - 3] + 3.0 * f[odd - 2] + 3.0 * f[odd - 1] + f[odd]
        )
    out[0] = 0
    return out


def _stencil(grid: Grid, x):
    x = np.asarray(x, dtype=float)
    tol = 1e-12 * grid.b
    if np.any(x < -tol) or np.any(x > grid.b + tol):
        raise DomainViolation(f"interpolation point outside [0, {grid.b}]")
    s = np.clip(x, 0.0, grid.b) / grid.h
    j = np.clip(np.floor(s).astype(int) - 1, 0, grid.M - 3)
    u = s - j
    # cubic Lagrange weights on nodes j..j+3 at local coordinate u
    w = np.stack(
        [
            -(u - 1) * (u - 2) * (u - 3) / 6.0,
            u * (u - 2) * (u - 3) / 2.0,
            -u * (u - 1) * (u - 3) / 2.0,
            u * (u - 1) * (u - 2) / 6.0,
        ],
        axis=-1,
    )
    return j, w


def interp(grid: Grid, values, x):
    """Four-point Lagrange interpolation of nodal samples at ``x``.

    ``x`` may be a scalar or an array; the result has shape
    ``x.shape + values.shape[1:]``. Stencils are clamped at the ends.
    """
    f = _check(grid, values)
    j, w = _stencil(grid, x)
    idx = j[..., None] + np.arange(4)
    taken = f[idx]  # x.shape + (4,) + trailing
    w = w.reshape(w.shape + (1,) * (f.ndim - 1))
    return np.sum(w * taken, axis=np.ndim(x))


def interp_deriv(grid: Grid, values, x):
    """Derivative of the same cubic interpolant (third-order accurate)."""
    f = _check(grid, values)
    x = np.asarray(x, dtype=float)
    j, _ = _stencil(grid, x)
    u = np.clip(x, 0.0, grid.b) / grid.h - j
    dw = np.stack(
        [
            -(3 * u**2 - 12 * u + 11) / 6.0,
            (3 * u**2 - 10 * u + 6) / 2.0,
            -(3 * u**2 - 8 * u + 3) / 2.0,
            (3 * u**2 - 6 * u + 2) / 6.0,
        ],
        axis=-1,
    ) / grid.h
    idx = j[..., None] + np.arange(4)
    dw = dw.reshape(dw.shape + (1,) * (f.ndim - 1))
    return np.sum(dw * f[idx], axis=np.ndim(x))


def nodal_derivative(grid: Grid, values):
    """Fourth-order finite-difference derivative at every node (one-sided at the ends)."""
    f = _check(grid, values)
    h = grid.h
    d = np.empty(f.shape, dtype=np.result_type(f, float))
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    return d
