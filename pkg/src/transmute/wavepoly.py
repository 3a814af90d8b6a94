"""Wave polynomials, generalized wave vectors and the Goursat-trace matrices.

Index conventions follow the sum formulas throughout: for ``m >= 0``

    p_{2m-1}(x, t) = sum_{even k <= m} C(m, k) x^{m-k} t^k
    p_{2m}(x, t)   = sum_{odd k <= m}  C(m, k) x^{m-k} t^k

so ``p_{-1} = 1`` and ``p_0 = 0``. The generalized vectors ``U_j``, ``V_j`` are
the same sums with ``Phi_{m-k}(x)`` (resp. ``Psi_{m-k}(x)``) in place of
``x^{m-k}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import FormalPowers
from .errors import InvariantViolation
from .grid import interp
from .mat2 import B, columns, frob_norm

N_MAX = 60
RELATION_TOL = 1e-10


def _pascal(n: int) -> np.ndarray:
    """Rows ``0..n`` of Pascal's triangle as floats."""
    C = np.zeros((n + 1, n + 1))
    C[:, 0] = 1.0
    for i in range(1, n + 1):
        C[i, 1 : i + 1] = C[i - 1, 0:i] + C[i - 1, 1 : i + 1]
    return C


BINOM = _pascal(N_MAX)


def binom(n: int, k: int) -> float:
    if n > N_MAX:
        raise ValueError(f"order {n} exceeds the supported maximum {N_MAX}")
    return BINOM[n, k] if 0 <= k <= n else 0.0


def _split(index: int) -> tuple[int, int]:
    """``index = 2m - 1`` -> ``(m, 0)`` (even k); ``index = 2m`` -> ``(m, 1)`` (odd k)."""
    if index < -1:
        raise ValueError(f"wave index must be >= -1, got {index}")
    return (index + 1) // 2, (index + 1) % 2


def wave_poly(m: int, parity: str, x, t):
    """``p_{2m-1}`` (parity ``'odd'``) or ``p_{2m}`` (parity ``'even'``) at ``(x, t)``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    start = 0 if parity == "odd" else 1
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast(x, t).shape)
    for k in range(start, m + 1, 2):
        out = out + binom(m, k) * x ** (m - k) * t**k
    return out if out.ndim else float(out)


def _wave_sum(F: np.ndarray, index: int, t):
    """``sum_k C(m,k) F[m-k] t^k`` over the parity class of ``index``.

    ``F`` has shape ``(N+1, ...)``; ``t`` broadcasts against ``F[0]`` after a
    trailing component axis is appended.
    """
    m, start = _split(index)
    if m >= F.shape[0]:
        raise ValueError(f"wave index {index} needs formal powers up to order {m}, have {F.shape[0] - 1}")
    t = np.asarray(t)[..., None]
    out = np.zeros(np.broadcast(F[0], t).shape, dtype=F.dtype)
    for k in range(start, m + 1, 2):
        out = out + binom(m, k) * F[m - k] * t**k
    return out


def uv_eval(fp: FormalPowers, kind: str, index: int, x, t):
    """Generalized wave vector ``U_index`` or ``V_index`` at ``(x, t)``.

    ``x`` is interpolated from the grid samples (exact at nodes). Result has
    shape ``broadcast(x, t).shape + (2,)``.
    """
    if kind in ("U", "u"):
        F = fp.Phi
    elif kind in ("V", "v"):
        F = fp.Psi
    else:
        raise ValueError(f"kind must be 'U' or 'V', got {kind!r}")
    m, _ = _split(index)
    if m > fp.N:
        raise ValueError(f"wave index {index} needs order {m} > {fp.N}")
    x = np.asarray(x, dtype=float)
    Fx = np.stack([interp(fp.grid, F[k], x) for k in range(m + 1)])
    return _wave_sum(Fx, index, t)


def _uv_diag(F: np.ndarray, index: int, x: np.ndarray):
    """``U``/``V`` sampled on the grid diagonal ``t = x``."""
    return _wave_sum(F, index, x)


def wave_matrix(fp: FormalPowers, i: int, m: int, x, t):
    """Generalized wave matrix ``O^i_m(x, t)`` built from its column definition."""
    U = lambda j: uv_eval(fp, "U", j, x, t)  # noqa: E731
    V = lambda j: uv_eval(fp, "V", j, x, t)  # noqa: E731
    if i == 1:
        return columns(U(2 * m - 1), -V(2 * m))
    if i == 2:
        return columns(V(2 * m), U(2 * m - 1))
    if i == 3:
        return columns(V(2 * m - 1), U(2 * m))
    if i == 4:
        return columns(-U(2 * m), V(2 * m - 1))
    raise ValueError(f"wave matrix family must be 1..4, got {i}")


def kernel_from_wave_matrices(fp: FormalPowers, coeffs, x, t):
    """Direct sum ``sum_n a_n O^1_n + b_n O^2_n + c_n O^3_n + d_n O^4_n``.

    Independent of the t-polynomial assembly; used to cross-check it.
    """
    coeffs = np.asarray(coeffs)
    out = 0
    for n, C in enumerate(coeffs):
        (a, b), (c, d) = C
        out = out + (
            a * wave_matrix(fp, 1, n, x, t)
            + b * wave_matrix(fp, 2, n, x, t)
            + c * wave_matrix(fp, 3, n, x, t)
            + d * wave_matrix(fp, 4, n, x, t)
        )
    return out


@dataclass
class WaveBasis:
    """Goursat-trace matrices ``calN_n`` and ``calM_n`` sampled on the grid.

    ``calN`` and ``calM`` have shape ``(N+1, M+1, 2, 2)``.
    """

    fp: FormalPowers = field(repr=False)
    N: int
    calN: np.ndarray = field(repr=False)
    calM: np.ndarray = field(repr=False)
    relation_residual: float = 0.0

    @property
    def grid(self):
        return self.fp.grid


def calN_table(fp: FormalPowers, N: int | None = None) -> WaveBasis:
    """Sample ``calN_n`` and ``calM_n``, ``n = 0..N``, on the grid diagonal.

    Raises:
        InvariantViolation: if ``B calN_n + calM_n`` is not negligible.
    """
    N = fp.N if N is None else N
    if N > fp.N:
        raise ValueError(f"formal powers only available up to order {fp.N}")
    x = fp.grid.x
    Phi, Psi = fp.Phi[: N + 1], fp.Psi[: N + 1]
    shape = (N + 1,) + Phi.shape[1:2] + (2, 2)
    calN = np.empty(shape, dtype=Phi.dtype)
    calM = np.empty(shape, dtype=Phi.dtype)
    for n in range(N + 1):
        U_odd, U_even = _uv_diag(Phi, 2 * n - 1, x), _uv_diag(Phi, 2 * n, x)
        V_odd, V_even = _uv_diag(Psi, 2 * n - 1, x), _uv_diag(Psi, 2 * n, x)
        BU_odd, BU_even = U_odd @ B.T, U_even @ B.T
        BV_odd, BV_even = V_odd @ B.T, V_even @ B.T
        calN[n] = columns(-V_even + BU_odd, U_even + BV_odd)
        calM[n] = columns(U_odd + BV_even, V_odd - BU_even)
    scale = max(1.0, float(np.max(frob_norm(calN))))
    resid = float(np.max(frob_norm(B @ calN + calM))) / scale
    if resid > RELATION_TOL:
        raise InvariantViolation(f"B N_n + M_n = {resid:.3e} exceeds {RELATION_TOL}")
    return WaveBasis(fp, N, calN, calM, resid)


def assemble_kernel_coeffs(coeffs, fp: FormalPowers) -> np.ndarray:
    """Coefficients ``calK_j(x)`` of ``K_N(x, t) = sum_j calK_j(x) t^j``.

    ``calK_j = sum_{m >= j} C(m, j) [Phi_{m-j} Psi_{m-j}] C'_m`` where
    ``C'_m = C_m`` for even ``j`` and ``B C_m B`` for odd ``j``. Returns an
    array of shape ``(N+1, M+1, 2, 2)``.
    """
    coeffs = np.asarray(coeffs)
    N = coeffs.shape[0] - 1
    if N > fp.N:
        raise ValueError(f"{N + 1} coefficient matrices need formal powers of order {N}, have {fp.N}")
    PP = columns(fp.Phi[: N + 1], fp.Psi[: N + 1])  # (N+1, M+1, 2, 2)
    flipped = B @ coeffs @ B
    K = np.zeros((N + 1,) + PP.shape[1:], dtype=np.result_type(PP, coeffs))
    for j in range(N + 1):
        Cj = coeffs if j % 2 == 0 else flipped
        for m in range(j, N + 1):
            K[j] += binom(m, j) * (PP[m - j] @ Cj[m])
    return K
