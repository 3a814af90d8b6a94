"""Schrodinger equations through the Dirac system with a Lorentz scalar potential.

If ``f`` is a non-vanishing solution of ``-f'' + q1 f = 0`` then
``-y'' + q1 y = w^2 y`` is equivalent to the Dirac system with ``p = 0`` and
``q = f'/f``, whose particular solution is ``(f, 1/f)``. For ``p = 0`` the
formal powers are ``Phi_k = (phi_k, 0)`` and ``Psi_k = (0, psi_k)``, the
traces ``calN_n`` are anti-diagonal and the least-squares problem splits into
two scalar problems:

    min || q/2 + sum_n a_n calN_n[1, 0] ||   (channel (2, 1))
    min || q/2 + sum_n d_n calN_n[0, 1] ||   (channel (1, 2))

With ``C_n = diag(a_n, d_n)`` the Dirac kernel is ``diag(K_f, K_{1/f})`` where

    K_f     = sum_n a_n u_{2n-1} - d_n u_{2n}
    K_{1/f} = sum_n d_n v_{2n-1} - a_n v_{2n}.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import FormalPowers, ParticularSolution, PotentialSpec, _as_values, formal_powers, recursive_integrals
from .errors import InvariantViolation, NonVanishingViolation
from .fit import KernelApprox, kernel_eval, solve_normal
from .grid import Grid, interp, nodal_derivative
from .wavepoly import assemble_kernel_coeffs, calN_table, uv_eval

NONVANISHING_TOL = 1e-10
STRUCTURE_TOL = 1e-10


def _rk4_second_order(q1: Callable, grid: Grid, substeps: int = 8):
    """Solutions of ``y'' = q1 y`` with data ``(1, 0)`` and ``(0, 1)``.

    Returns ``(y, dy)``, each of shape ``(M+1, 2)`` (columns: the two solutions).
    """
    n = grid.M * substeps
    dx = grid.b / n
    xs = np.linspace(0.0, grid.b, 2 * n + 1)
    qv = _as_values(q1, xs)
    if not np.all(np.isfinite(qv)):
        raise ValueError("q1 is not finite on [0, b]")
    A = np.zeros(xs.shape + (2, 2), dtype=np.result_type(qv, float))
    A[:, 0, 1] = 1.0
    A[:, 1, 0] = qv
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
    return out[:, 0, :], out[:, 1, :]


def _vanishes_at(f: np.ndarray):
    """Index of a node where ``f`` nearly vanishes or a real ``f`` changes sign, else ``None``."""
    a = np.abs(f)
    if np.min(a) < NONVANISHING_TOL * np.max(a):
        return int(np.argmin(a))
    if np.isrealobj(f):
        flips = np.nonzero(f[:-1] * f[1:] < 0)[0]
        if flips.size:
            return int(flips[0])
    return None


@dataclass
class SchrodProblem:
    """Reduction of ``-y'' + q1 y = w^2 y`` on ``[0, b]`` to a Dirac system.

    ``f`` and ``df`` are nodal samples with ``f(0) = 1`` and ``df(0) = h``;
    ``dirac`` is the potential ``p = 0``, ``q = f'/f``; ``fp`` holds the
    formal powers of that system built from ``(f, 1/f)``.
    """

    q1: Callable = field(repr=False)
    grid: Grid
    h: complex
    f: np.ndarray = field(repr=False)
    df: np.ndarray = field(repr=False)
    dirac: PotentialSpec = field(repr=False)
    fp: FormalPowers = field(repr=False)
    residual: float = 0.0

    @property
    def b(self) -> float:
        return self.grid.b

    @property
    def N(self) -> int:
        return self.fp.N

    @property
    def q(self) -> np.ndarray:
        return self.df / self.f

    @property
    def phi(self) -> np.ndarray:
        """Scalar formal powers ``phi_k`` on the grid, shape ``(N+1, M+1)``."""
        return self.fp.Phi[..., 0]

    @property
    def psi(self) -> np.ndarray:
        return self.fp.Psi[..., 1]

    def u(self, m: int, x, t):
        """Scalar wave function ``u_m(x, t)`` (``m >= -1``)."""
        return uv_eval(self.fp, "U", m, x, t)[..., 0]

    def v(self, m: int, x, t):
        return uv_eval(self.fp, "V", m, x, t)[..., 1]

    def c_trace(self, n: int):
        """``u_{2n-1}(x, x)`` on the grid."""
        return self.u(2 * n - 1, self.grid.x, self.grid.x)

    def s_trace(self, n: int):
        """``u_{2n}(x, x)`` on the grid."""
        return self.u(2 * n, self.grid.x, self.grid.x)


def schrod_reduce(q1: Callable, grid: Grid, N: int, h: complex | None = None, substeps: int = 8) -> SchrodProblem:
    """Build ``f``, ``q = f'/f`` and the formal powers up to order ``N``.

    ``f`` is ``f1 + h f2`` from the solutions with data ``(1, 0)`` and
    ``(0, 1)``. By default ``h = 0`` when ``f1`` stays away from zero and
    ``h = i`` otherwise; for real ``q1`` the complex combination cannot vanish.

    Raises:
        NonVanishingViolation: if the chosen ``f`` nearly vanishes on the grid.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    y, dy = _rk4_second_order(q1, grid, substeps)
    if h is None:
        h = 0.0 if _vanishes_at(y[:, 0]) is None else 1j
    f = y[:, 0] + h * y[:, 1]
    df = dy[:, 0] + h * dy[:, 1]
    if np.isrealobj(f) or not np.any(np.imag(f)):
        f, df = np.real(f), np.real(df)
    i = _vanishes_at(f)
    if i is not None:
        raise NonVanishingViolation(f"f vanishes near x={grid.x[i]:.6g}; try another h")
    # -f'' + q1 f = 0, with f'' from the RK derivative samples
    q1v = _as_values(q1, grid.x)
    scale = max(1.0, float(np.max(np.abs(q1v * f))))
    residual = float(np.max(np.abs(-nodal_derivative(grid, df) + q1v * f))) / scale
    qv = df / f
    dirac = PotentialSpec(
        lambda x: 0.0, lambda x, _q=qv: interp(grid, _q, x), grid.b, label="schrodinger: q=f'/f"
    )
    sol = ParticularSolution(grid, f, 1.0 / f, "schrodinger").check()
    fp = formal_powers(recursive_integrals(sol, dirac, N))
    return SchrodProblem(q1, grid, h, f, df, dirac, fp, residual)


@dataclass
class SchrodFit:
    """Scalar kernels ``K_{f,N}`` and ``K_{1/f,N}`` and their coefficients."""

    problem: SchrodProblem = field(repr=False)
    a: np.ndarray
    d: np.ndarray
    residual_a: float
    residual_d: float
    ridge: float
    kernel: KernelApprox = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.a) - 1

    def kf(self, x, t):
        """``K_{f,N}(x, t)`` on ``0 <= x <= b``, ``|t| <= x``."""
        return kernel_eval(self.kernel, x, t)[..., 0, 0]

    def k1f(self, x, t):
        """``K_{1/f,N}(x, t)``."""
        return kernel_eval(self.kernel, x, t)[..., 1, 1]

    def to_csv(self, nx: int = 21, nt: int = 21) -> str:
        """Both kernels on a ``nx`` by ``nt`` grid of the triangle (``t = s x``, ``s`` in [-1, 1])."""
        xs = np.linspace(0.0, self.problem.b, nx)
        ss = np.linspace(-1.0, 1.0, nt)
        X = xs[:, None] * np.ones_like(ss)
        T = xs[:, None] * ss
        K = kernel_eval(self.kernel, X, T)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cplx = np.iscomplexobj(K)
        head = ["x", "t", "K_f", "K_1/f"]
        if cplx:
            head = ["x", "t", "re_K_f", "im_K_f", "re_K_1/f", "im_K_1/f"]
        w.writerow(head)
        for i in range(nx):
            for j in range(nt):
                kf, k1 = K[i, j, 0, 0], K[i, j, 1, 1]
                vals = [kf.real, kf.imag, k1.real, k1.imag] if cplx else [kf, k1]
                w.writerow([f"{float(v) + 0.0:.17g}" for v in [X[i, j], T[i, j]] + vals])
        return buf.getvalue()


def _scalar_lsq(grid: Grid, basis: np.ndarray, target: np.ndarray, ridge):
    """``min || target + sum c_n basis_n ||`` via normal equations; returns (c, residual, ridge)."""
    w = grid.weights()
    G = (np.conj(basis) * w) @ basis.T
    rhs = -(np.conj(basis) * w) @ target
    if np.isrealobj(basis) and np.isrealobj(target):
        G, rhs = G.real, rhs.real
    G = 0.5 * (G + np.conj(G.T))
    c, used = solve_normal(G, rhs[:, None], ridge)
    c = c[:, 0]
    res = float(np.sqrt(abs(w @ np.abs(target + c @ basis) ** 2)))
    return c, res, used


def schrod_fit(sp: SchrodProblem, N: int | None = None, ridge: float | None = None) -> SchrodFit:
    """Solve the two scalar least-squares problems and assemble both kernels.

    The scalar basis functions are the off-diagonal entries of the Dirac
    traces ``calN_n`` for ``p = 0``, so no symbolic differentiation is needed.

    Raises:
        SingularSystem: when the normal equations fail along the ridge ladder
            (``ridge=None``) or at the requested ridge.
        InvariantViolation: if the traces are not anti-diagonal.
    """
    N = sp.N if N is None else N
    if N < 1:
        raise ValueError("N must be at least 1")
    wb = calN_table(sp.fp, N)
    diag = np.max(np.abs(wb.calN[..., 0, 0])) + np.max(np.abs(wb.calN[..., 1, 1]))
    if diag > STRUCTURE_TOL * max(1.0, float(np.max(np.abs(wb.calN)))):
        raise InvariantViolation(f"traces are not anti-diagonal ({diag:.3e}); is p really zero?")
    half_q = 0.5 * sp.q
    a, ra, used_a = _scalar_lsq(sp.grid, wb.calN[:, :, 1, 0], half_q, ridge)
    d, rd, used_d = _scalar_lsq(sp.grid, wb.calN[:, :, 0, 1], half_q, ridge)
    coeffs = np.zeros((N + 1, 2, 2), dtype=np.result_type(a, d))
    coeffs[:, 0, 0] = a
    coeffs[:, 1, 1] = d
    calK = assemble_kernel_coeffs(coeffs, sp.fp)
    used = max(used_a, used_d)
    ka = KernelApprox(N, sp.grid, coeffs, calK, float(np.hypot(ra, rd)), used, wb, label="schrodinger")
    return SchrodFit(sp, a, d, ra, rd, used, ka)
