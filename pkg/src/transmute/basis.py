"""Particular solution, recursive integrals, formal powers and SPPS sums.

For ``Q = [[p, q], [q, -p]]`` and a non-vanishing solution ``(f, g)`` of the
homogeneous system ``B Y' + Q Y = 0`` normalised by ``f(0) g(0) = 1`` the
recursions below produce the images ``Phi_k = T (x^k, 0)^T`` and
``Psi_k = T (0, x^k)^T`` of the monomial vectors under the transmutation
operator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonVanishingViolation, TruncationWarning
from .grid import Grid, cumint, nodal_derivative
from .mat2 import potential_matrix

NONVANISHING_TOL = 1e-10
P_ZERO_TOL = 1e-14


def _as_values(fn, x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.asarray(fn(x)), x.shape)


@dataclass(frozen=True)
class PotentialSpec:
    """Entries ``p(x)``, ``q(x)`` of the potential matrix on ``[0, b]``.

    ``p`` and ``q`` must accept numpy arrays. Constant callables returning a
    scalar are broadcast.
    """

    p: Callable
    q: Callable
    b: float
    label: str = ""

    @classmethod
    def from_expressions(cls, p_src: str, q_src: str, b: float) -> "PotentialSpec":
        from .expr import parse_expression

        return cls(parse_expression(p_src), parse_expression(q_src), float(b), label=f"p={p_src}; q={q_src}")

    @classmethod
    def from_samples(cls, x, p, q, label="tabulated") -> "PotentialSpec":
        """Cubic-spline interpolant of tabulated ``p``, ``q`` on ``[0, x[-1]]``."""
        from scipy.interpolate import CubicSpline

        x = np.asarray(x, dtype=float)
        if x[0] != 0.0:
            raise ValueError("tabulated potential must start at x = 0")
        sp, sq = CubicSpline(x, np.asarray(p)), CubicSpline(x, np.asarray(q))
        return cls(sp, sq, float(x[-1]), label=label)

    @classmethod
    def zero(cls, b: float) -> "PotentialSpec":
        return cls(lambda x: 0.0, lambda x: 0.0, float(b), label="zero")

    def sample(self, x):
        """``(p(x), q(x))`` as arrays shaped like ``x``."""
        return _as_values(self.p, x), _as_values(self.q, x)

    def matrix(self, x):
        return potential_matrix(*self.sample(x))

    def on_grid(self, grid: Grid):
        p, q = self.sample(grid.x)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError(f"potential {self.label!r} is not finite on the grid")
        return p, q

    def is_real(self, grid: Grid) -> bool:
        p, q = self.on_grid(grid)
        return not (np.iscomplexobj(p) and np.any(p.imag)) and not (np.iscomplexobj(q) and np.any(q.imag))

    def p_vanishes(self, grid: Grid) -> bool:
        p, _ = self.on_grid(grid)
        return bool(np.max(np.abs(p)) < P_ZERO_TOL)


@dataclass(frozen=True)
class ParticularSolution:
    """Non-vanishing ``(f, g)`` on the grid with ``f(0) g(0) = 1``."""

    grid: Grid
    f: np.ndarray
    g: np.ndarray
    method: str = ""

    @property
    def norm_product(self):
        return self.f[0] * self.g[0]

    def check(self):
        for name, v in (("f", self.f), ("g", self.g)):
            a = np.abs(v)
            if np.min(a) < NONVANISHING_TOL * np.max(a):
                i = int(np.argmin(a))
                raise NonVanishingViolation(f"{name} nearly vanishes at x={self.grid.x[i]:.6g}")
        return self


def homogeneous_residual(sol: ParticularSolution, pot: PotentialSpec):
    """Max nodal residual of ``g' + p f + q g`` and ``-f' + q f - p g``."""
    p, q = pot.on_grid(sol.grid)
    df = nodal_derivative(sol.grid, sol.f)
    dg = nodal_derivative(sol.grid, sol.g)
    r1 = dg + p * sol.f + q * sol.g
    r2 = -df + q * sol.f - p * sol.g
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def _rk4_fundamental(pot: PotentialSpec, grid: Grid, substeps: int = 8):
    """Fundamental matrix of ``Y' = B Q Y`` at the grid nodes, classical RK4.

    Step is ``h/substeps``. The coefficient matrix is sampled once at all
    stage abscissae.
    """
    n = grid.M * substeps
    dx = grid.b / n
    xs = np.linspace(0.0, grid.b, 2 * n + 1)
    p, q = pot.sample(xs)
    A = np.empty(xs.shape + (2, 2), dtype=np.result_type(p, q, float))
    # B Q = [[q, -p], [-p, -q]]
    A[:, 0, 0] = q
    A[:, 0, 1] = -p
    A[:, 1, 0] = -p
    A[:, 1, 1] = -q
    Y = np.eye(2, dtype=A.dtype)
    out = np.empty((grid.M + 1, 2, 2), dtype=A.dtype)
    out[0] = Y
    for k in range(n):
        a0, a1, a2 = A[2 * k], A[2 * k + 1], A[2 * k + 2]
        k1 = a0 @ Y
        k2 = a1 @ (Y + 0.5 * dx * k1)
        k3 = a1 @ (Y + 0.5 * dx * k2)
        k4 = a2 @ (Y + dx * k3)
        Y = Y + (dx / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (k + 1) % substeps == 0:
            out[(k + 1) // substeps] = Y
    return out


def _normalized(grid, f, g, method):
    s = np.sqrt(complex(f[0] * g[0]))
    if np.isrealobj(f) and np.isrealobj(g) and s.imag == 0 and s.real > 0:
        s = s.real
    return ParticularSolution(grid, f / s, g / s, method).check()


def particular_solution(
    pot: PotentialSpec, grid: Grid, method: str = "auto", substeps: int = 8, rotation: float = 0.0
) -> ParticularSolution:
    """Non-vanishing solution of the homogeneous system (lambda = 0).

    ``method``:
      * ``"exp"`` -- ``f = exp(int q)``, ``g = exp(-int q)``; exact when ``p = 0``.
      * ``"complex"`` -- the solution with initial data ``(1, i e^{i*rotation})``.
        For real ``p, q`` and ``rotation = 0`` this is ``f1 + i f2`` built from
        the real solutions with data ``(1, 0)`` and ``(0, 1)``, which cannot
        vanish. For complex potentials non-vanishing is only checked, and the
        caller may retry with another ``rotation``.
      * ``"auto"`` -- ``"exp"`` when ``max|p| < 1e-14`` on the grid, else ``"complex"``.
    The result is rescaled by ``1/sqrt(f(0) g(0))`` (principal root).
    """
    if method == "auto":
        method = "exp" if pot.p_vanishes(grid) else "complex"
    if method == "exp":
        _, q = pot.on_grid(grid)
        iq = cumint(grid, q)
        return _normalized(grid, np.exp(iq), np.exp(-iq), "exp")
    if method != "complex":
        raise ValueError(f"unknown method {method!r}")
    Y = _rk4_fundamental(pot, grid, substeps)
    ic = np.array([1.0, 1j * np.exp(1j * rotation)])
    fg = Y @ ic
    return _normalized(grid, fg[:, 0], fg[:, 1], "complex")


@dataclass
class RecursiveIntegrals:
    """``X^(n)``, ``Y^(n)``, ``Z^(n)`` and the tilde family, shape ``(N+1, M+1)``."""

    sol: ParticularSolution
    N: int
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    Xt: np.ndarray
    Yt: np.ndarray
    Zt: np.ndarray
    real_potential: bool = False


def _family(grid, f2, g2, p_f2, p_g2, g_f, f_g, X0, Y0, N):
    shape = (N + 1,) + X0.shape
    X = np.empty(shape, dtype=complex)
    Y = np.empty(shape, dtype=complex)
    Z = np.empty(shape, dtype=complex)
    X[0], Y[0] = X0, Y0
    for n in range(N + 1):
        Z[n] = cumint(grid, f2 * X[n] + g2 * Y[n])
        if n == N:
            break
        X[n + 1] = -(n + 1) * cumint(grid, p_f2 * Z[n] + g_f * Y[n])
        Y[n + 1] = (n + 1) * cumint(grid, p_g2 * Z[n] + f_g * X[n])
    return X, Y, Z


def recursive_integrals(sol: ParticularSolution, pot: PotentialSpec, N: int) -> RecursiveIntegrals:
    if N < 0:
        raise ValueError("N must be nonnegative")
    grid = sol.grid
    p, _ = pot.on_grid(grid)
    f, g = sol.f.astype(complex), sol.g.astype(complex)
    f2, g2 = f * f, g * g
    p_f2, p_g2 = p / f2, p / g2
    Ipf = cumint(grid, p_f2)
    Ipg = cumint(grid, p_g2)
    args = (grid, f2, g2, p_f2, p_g2, g / f, f / g)
    X, Y, Z = _family(*args, -Ipf, 1.0 + Ipg, N)
    Xt, Yt, Zt = _family(*args, 1.0 + Ipf, -Ipg, N)
    return RecursiveIntegrals(sol, N, X, Y, Z, Xt, Yt, Zt, real_potential=pot.is_real(grid))


@dataclass
class FormalPowers:
    """``Phi_k``, ``Psi_k`` sampled on the grid, shape ``(N+1, M+1, 2)``."""

    grid: Grid
    N: int
    Phi: np.ndarray
    Psi: np.ndarray
    intermediates: RecursiveIntegrals = field(repr=False)
    imag_residue: float = 0.0

    @property
    def sol(self) -> ParticularSolution:
        return self.intermediates.sol


def formal_powers(ri: RecursiveIntegrals, N: int | None = None, realify: bool | None = None) -> FormalPowers:
    """Assemble ``Phi_k``, ``Psi_k`` with the parity-dependent signs and factors.

    For real potentials the formal powers are real whatever complex ``(f, g)``
    was used; with ``realify`` (default: on for real potentials) the
    round-off imaginary parts are dropped and their size is recorded.
    """
    N = ri.N if N is None else N
    if N > ri.N:
        raise ValueError(f"intermediates only available up to order {ri.N}")
    sol = ri.sol
    f, g = sol.f, sol.g
    f0, g0 = f[0], g[0]
    M1 = f.shape[0]
    Phi = np.empty((N + 1, M1, 2), dtype=complex)
    Psi = np.empty((N + 1, M1, 2), dtype=complex)
    for k in range(N + 1):
        plain = np.stack([f * ri.X[k], g * ri.Y[k]], axis=-1)
        tilde = np.stack([f * ri.Xt[k], g * ri.Yt[k]], axis=-1)
        # tilde family carries g(0), plain family f(0): T(cos, sin) = g(0) Y1, T(-sin, cos) = f(0) Y2
        if k % 2:
            Phi[k] = (-1) ** ((k + 1) // 2) * f0 * plain
            Psi[k] = (-1) ** ((k - 1) // 2) * g0 * tilde
        else:
            Phi[k] = (-1) ** (k // 2) * g0 * tilde
            Psi[k] = (-1) ** (k // 2) * f0 * plain
    if realify is None:
        realify = ri.real_potential
    residue = 0.0
    if realify:
        scale = max(np.max(np.abs(Phi)), np.max(np.abs(Psi)))
        residue = float(max(np.max(np.abs(Phi.imag)), np.max(np.abs(Psi.imag))) / scale)
        Phi, Psi = Phi.real.copy(), Psi.real.copy()
    return FormalPowers(sol.grid, N, Phi, Psi, ri, residue)


def build_formal_powers(pot: PotentialSpec, grid: Grid, N: int, method: str = "auto") -> FormalPowers:
    sol = particular_solution(pot, grid, method=method)
    return formal_powers(recursive_integrals(sol, pot, N))


def spps_solution(fp: FormalPowers, lam: complex, truncation: int | None = None):
    """Truncated SPPS sums ``(Y1, Y2)``, each of shape ``(M+1, 2)``.

    ``Y1(0) = (f(0), 0)`` and ``Y2(0) = (0, g(0))``.
    """
    ri = fp.intermediates
    n_max = ri.N if truncation is None else truncation
    if n_max > ri.N:
        raise ValueError(f"truncation {n_max} exceeds available order {ri.N}")
    f, g = ri.sol.f, ri.sol.g
    Y1 = np.zeros((f.shape[0], 2), dtype=complex)
    Y2 = np.zeros_like(Y1)
    c = 1.0 + 0j
    last = 0.0
    for n in range(n_max + 1):
        if n:
            c = c * lam / n
        t1 = c * np.stack([f * ri.Xt[n], g * ri.Yt[n]], axis=-1)
        t2 = c * np.stack([f * ri.X[n], g * ri.Y[n]], axis=-1)
        Y1 += t1
        Y2 += t2
        last = max(np.max(np.abs(t1)), np.max(np.abs(t2)))
    total = max(np.max(np.abs(Y1)), np.max(np.abs(Y2)))
    if n_max > 0 and last > 1e-8 * total:
        warnings.warn(
            f"SPPS not converged at lambda={lam}: last term {last:.2e} vs sum {total:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    return Y1, Y2
