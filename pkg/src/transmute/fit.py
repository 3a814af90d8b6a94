"""Least-squares fit of the Goursat-trace condition and kernel evaluation.

The coefficients ``C_n = [[a_n, b_n], [c_n, d_n]]`` minimise

    || Q/2 + sum_n calN_n(x) C_n ||_{L2(0, b)}

through the normal equations with Gram blocks ``int calN_i^H calN_j dx``.
The two columns of ``C`` decouple and share the Gram matrix.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import FormalPowers, PotentialSpec, build_formal_powers
from .errors import DomainViolation, SingularSystem
from .grid import Grid, cumint, interp
from .mat2 import B, frob_norm
from .wavepoly import WaveBasis, assemble_kernel_coeffs, calN_table

RIDGE_LADDER = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
DOMAIN_TOL = 1e-12


def _integrate(grid: Grid, values):
    return cumint(grid, values)[-1]


@dataclass
class NormalSystem:
    """Gram matrix ``A`` (Hermitian) and right-hand sides ``b1``, ``b2``.

    Unknowns are interleaved as ``(a_0, c_0, a_1, c_1, ...)`` for ``b1`` and
    ``(b_0, d_0, b_1, d_1, ...)`` for ``b2``.
    """

    A: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    @property
    def order(self) -> int:
        return self.A.shape[0] // 2 - 1

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.A) or np.iscomplexobj(self.b1) or np.iscomplexobj(self.b2))


def _gram(grid: Grid, basis: np.ndarray, target: np.ndarray):
    """Gram blocks and right-hand side for ``min || target + sum basis_n C_n ||``.

    ``basis`` has shape ``(N+1, M+1, 2, 2)`` and ``target`` ``(M+1, 2, 2)``.
    """
    n = basis.shape[0]
    Bh = np.conj(basis).swapaxes(-1, -2)
    # G[x, i, j] = N_i(x)^H N_j(x)
    G = np.einsum("ixab,jxbc->xijac", Bh, basis, optimize=True)
    G = _integrate(grid, G)  # (i, j, 2, 2)
    A = G.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
    R = -0.5 * _integrate(grid, np.einsum("ixab,xbc->xiac", Bh, target, optimize=True))
    rhs = R.reshape(2 * n, 2)
    if np.isrealobj(basis) and np.isrealobj(target):
        A, rhs = A.real, rhs.real
    return A, rhs


def build_normal_system(wb: WaveBasis, pot: PotentialSpec) -> NormalSystem:
    Q = pot.matrix(wb.grid.x)
    A, rhs = _gram(wb.grid, wb.calN, Q)
    A = 0.5 * (A + np.conj(A.T))
    return NormalSystem(A, rhs[:, 0].copy(), rhs[:, 1].copy())


def _solve_once(A, rhs, ridge: float):
    n = A.shape[0]
    M = A + ridge * np.eye(n) if ridge else A
    # Jacobi equilibration: the Gram diagonal spans many orders of magnitude
    d = np.sqrt(np.abs(np.diag(M)))
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise SingularSystem(f"zero or non-finite Gram diagonal at ridge={ridge:g}")
    S = M / np.outer(d, d)
    assume = "sym" if np.isrealobj(S) else "her"
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            y = scipy.linalg.solve(S, rhs / d[:, None], assume_a=assume)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError) as exc:
            raise SingularSystem(f"normal equations not solvable at ridge={ridge:g}: {exc}") from exc
    x = y / d[:, None]
    if not np.all(np.isfinite(x)):
        raise SingularSystem(f"non-finite solution at ridge={ridge:g}")
    return x


def solve_normal(A, rhs, ridge: float | None = 0.0):
    """Solve ``(A + ridge I) x = rhs``; ``ridge=None`` walks the escalation ladder.

    Returns ``(x, ridge_used)``.
    """
    if ridge is not None:
        return _solve_once(A, rhs, ridge), ridge
    last = None
    for r in RIDGE_LADDER:
        try:
            return _solve_once(A, rhs, r), r
        except SingularSystem as exc:
            last = exc
    raise SingularSystem(f"ridge ladder exhausted up to {RIDGE_LADDER[-1]:g}") from last


def fit_coefficients(ns: NormalSystem, ridge: float | None = 0.0):
    """Coefficient matrices ``C_n``, shape ``(N+1, 2, 2)``, and the ridge used.

    Raises:
        SingularSystem: if the solve fails at the requested ridge (when
            ``ridge`` is a number) or along the whole ladder (``ridge=None``).
    """
    rhs = np.stack([ns.b1, ns.b2], axis=-1)
    x, used = solve_normal(ns.A, rhs, ridge)
    n = ns.order + 1
    # rows of x are (a_0, c_0, a_1, c_1, ...), columns are the two columns of C
    return x.reshape(n, 2, 2), used


def lstsq_direct(wb: WaveBasis, pot: PotentialSpec, N: int | None = None):
    """Coefficients from the discretised overdetermined system, without normal equations.

    Rows are grid nodes times matrix rows, weighted by the square roots of the
    quadrature weights, so the discrete objective is the same as the one
    behind the Gram matrix. Solved by pivoted QR (LAPACK ``gelsy``).
    """
    N = wb.N if N is None else N
    grid = wb.grid
    sw = np.sqrt(grid.weights())
    basis = wb.calN[: N + 1]  # (n, x, r, s)
    # design[(x, r), (j, s)] = sqrt(w_x) N_j(x)[r, s]
    design = np.einsum("x,jxrs->xrjs", sw, basis).reshape(-1, 2 * (N + 1))
    Q = pot.matrix(grid.x)
    target = -0.5 * np.einsum("x,xrc->xrc", sw, Q).reshape(-1, 2)
    if np.isrealobj(design) and np.isrealobj(target):
        design, target = design.real, target.real
    sol, *_ = scipy.linalg.lstsq(design, target, lapack_driver="gelsy")
    return sol.reshape(N + 1, 2, 2)


def objective_residual(wb: WaveBasis, pot: PotentialSpec, coeffs) -> float:
    """``|| Q/2 + sum calN_n C_n ||_{L2(0, b)}`` with the Frobenius norm pointwise."""
    coeffs = np.asarray(coeffs)
    Q = pot.matrix(wb.grid.x)
    E = 0.5 * Q + np.einsum("nxab,nbc->xac", wb.calN[: len(coeffs)], coeffs)
    return float(np.sqrt(abs(_integrate(wb.grid, frob_norm(E) ** 2))))


@dataclass
class KernelApprox:
    """Fitted ``K_N(x, t) = sum_n calK_n(x) t^n`` on a grid over ``[0, b]``."""

    N: int
    grid: Grid
    coeffs: np.ndarray
    calK: np.ndarray = field(repr=False)
    residual: float = float("nan")
    ridge: float = 0.0
    wave_basis: WaveBasis | None = field(default=None, repr=False)
    label: str = ""

    @property
    def b(self) -> float:
        return self.grid.b

    def to_json(self) -> str:
        return json.dumps(
            {
                "order": self.N,
                "grid": {"b": self.grid.b, "M": self.grid.M},
                "coefficients": [
                    [[[float(np.real(v)), float(np.imag(v))] for v in row] for row in C] for C in self.coeffs
                ],
                "residual": self.residual,
                "ridge": self.ridge,
                "potential": self.label,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str, fp: FormalPowers) -> "KernelApprox":
        """Rebuild from a JSON document and formal powers of the same potential."""
        doc = json.loads(text)
        grid = Grid(float(doc["grid"]["b"]), int(doc["grid"]["M"]))
        if grid != fp.grid:
            raise ValueError(f"document grid {grid} does not match formal powers grid {fp.grid}")
        raw = np.array(doc["coefficients"], dtype=float)
        coeffs = raw[..., 0] + 1j * raw[..., 1]
        if not np.any(coeffs.imag):
            coeffs = coeffs.real
        return cls(
            int(doc["order"]),
            grid,
            coeffs,
            assemble_kernel_coeffs(coeffs, fp),
            float(doc["residual"]),
            float(doc["ridge"]),
            label=doc.get("potential", ""),
        )


def fit_kernel(
    pot: PotentialSpec,
    N: int,
    grid: Grid | None = None,
    ridge: float | None = None,
    method: str = "auto",
    fp: FormalPowers | None = None,
    solver: str = "normal",
) -> KernelApprox:
    """Run the full construction: formal powers, ``calN_n``, least squares, ``calK_n``.

    ``solver="normal"`` solves the normal equations (``ridge=None`` starts
    unregularised and escalates only on failure); ``solver="qr"`` solves the
    weighted overdetermined system directly and ignores ``ridge``.
    """
    grid = grid or Grid(pot.b)
    if fp is None:
        fp = build_formal_powers(pot, grid, N, method=method)
    wb = calN_table(fp, N)
    if solver == "normal":
        ns = build_normal_system(wb, pot)
        coeffs, used = fit_coefficients(ns, ridge)
    elif solver == "qr":
        coeffs, used = lstsq_direct(wb, pot), 0.0
    else:
        raise ValueError(f"solver must be 'normal' or 'qr', got {solver!r}")
    calK = assemble_kernel_coeffs(coeffs, fp)
    res = objective_residual(wb, pot, coeffs)
    return KernelApprox(N, grid, coeffs, calK, res, used, wb, label=pot.label)


def check_domain(b: float, x, t):
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    tol = DOMAIN_TOL * max(1.0, b)
    if np.any(x < -tol) or np.any(x > b + tol) or np.any(np.abs(t) > x + tol):
        raise DomainViolation(f"(x, t) outside the triangle 0 <= x <= {b}, |t| <= x")
    return x, t


def kernel_coeffs_at(ka: KernelApprox, x):
    """``calK_n(x)`` interpolated at arbitrary ``x``, shape ``(N+1,) + x.shape + (2, 2)``."""
    return np.stack([interp(ka.grid, ka.calK[n], x) for n in range(ka.N + 1)])


def horner(Kx: np.ndarray, t):
    """``sum_n Kx[n] t^n`` for ``Kx`` of shape ``(N+1, ..., 2, 2)``."""
    t = np.asarray(t)[..., None, None]
    out = Kx[-1] * np.ones_like(t)
    for Kn in Kx[-2::-1]:
        out = out * t + Kn
    return out


def kernel_eval(ka: KernelApprox, x, t):
    """``K_N(x, t)`` for ``0 <= x <= b``, ``|t| <= x`` (broadcasting)."""
    x, t = check_domain(ka.b, x, t)
    return horner(kernel_coeffs_at(ka, x), t)


def goursat_residual(ka: KernelApprox, pot: PotentialSpec):
    """Per-node Frobenius residuals of the two characteristic conditions.

    ``r_plus = |-Q - (B K(x,x) - K(x,x) B)|`` and ``r_minus = |B K(x,-x) + K(x,-x) B|``.
    """
    x = ka.grid.x
    Kp = horner(ka.calK, x)
    Km = horner(ka.calK, -x)
    Q = pot.matrix(x)
    r_plus = frob_norm(-Q - (B @ Kp - Kp @ B))
    r_minus = frob_norm(B @ Km + Km @ B)
    return r_plus, r_minus


def kernel_l2_error(ka: KernelApprox, reference, xs, nodes: int = 48):
    """Per-x ``L2(-x, x)`` Frobenius error of ``K_N`` against ``reference(x, t)``.

    ``reference`` maps arrays ``(x, t)`` to ``(..., 2, 2)`` kernel values.
    Gauss-Legendre in ``t`` with ``nodes`` points.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    u, w = np.polynomial.legendre.leggauss(nodes)
    X = xs[:, None] * np.ones_like(u)
    T = xs[:, None] * u
    diff = kernel_eval(ka, X, T) - reference(X, T)
    return np.sqrt(np.sum(w * frob_norm(diff) ** 2, axis=1) * xs)


def kernel_sup_error(ka: KernelApprox, reference, xs, nt: int = 41):
    """Sup of the entrywise error over points ``(x, t)``, ``t`` uniform in ``[-x, x]``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    s = np.linspace(-1.0, 1.0, nt)
    X = xs[:, None] * np.ones_like(s)
    T = xs[:, None] * s
    diff = kernel_eval(ka, X, T) - reference(X, T)
    return float(np.max(np.abs(diff)))
