"""Approximate solutions, initial-value and real eigenvalue problems.

With ``K_N(x, t) = sum_n calK_n(x) t^n`` the approximate fundamental solutions
are

    C_N(x, lam) = (cos lam x, sin lam x) + sum_n calK_n(x) (c_n, s_n)
    S_N(x, lam) = (-sin lam x, cos lam x) + sum_n calK_n(x) (-s_n, c_n)

where ``c_n``, ``s_n`` are the moments of ``t^n cos(lam t)`` and
``t^n sin(lam t)`` over ``[-x, x]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BracketLost, ComplexCharacteristic
from .fit import KernelApprox, kernel_coeffs_at

IMAG_TOL = 1e-6


def switch_threshold(N: int) -> float:
    """``|lam| x`` below which moments come from the Taylor series.

    The upward recurrence divides by ``lam`` at every order and amplifies
    rounding by roughly ``n! / (lam x)^n``; beyond ``lam x ~ n/2`` it is
    harmless, while the Taylor series stays accurate well past that point.
    """
    return max(0.5, 0.5 * N)


def _moments_taylor(N: int, lam, x):
    z2 = (lam * x) ** 2
    c = np.zeros((N + 1,) + np.shape(z2))
    s = np.zeros_like(c)
    for n in range(N + 1):
        # even n: sum_k (-1)^k z^{2k} / (2k)! * 2 x^{n+1} / (n+2k+1)
        # odd n:  sum_k (-1)^k z^{2k+1} / (2k+1)! * 2 x^{n+1} / (n+2k+2)
        first = 2.0 * x ** (n + 1) * (1.0 if n % 2 == 0 else lam * x)
        term = np.ones_like(z2)
        total = term / (n + 1 + (n % 2))
        k = 0
        while True:
            k += 1
            j = 2 * k + (n % 2)
            term = -term * z2 / ((j - 1) * j)
            piece = term / (n + j + 1)
            total = total + piece
            if np.all(np.abs(piece) <= 1e-17 * np.maximum(np.abs(total), 1.0 / (n + 2))) or k > 400:
                break
        if n % 2 == 0:
            c[n] = first * total
        else:
            s[n] = first * total
    return c, s


def _moments_upward(N: int, lam, x):
    sn, cs = np.sin(lam * x), np.cos(lam * x)
    c = np.zeros((N + 1,) + np.shape(sn))
    s = np.zeros_like(c)
    c[0] = 2.0 * sn / lam
    xn = np.ones_like(sn)
    for n in range(1, N + 1):
        xn = xn * x
        if n % 2 == 0:
            c[n] = 2.0 * xn * sn / lam - (n / lam) * s[n - 1]
        else:
            s[n] = -2.0 * xn * cs / lam + (n / lam) * c[n - 1]
    return c, s


def trig_moments(N: int, lam, x):
    """All moments ``c_n = int_{-x}^{x} t^n cos(lam t) dt`` and ``s_n`` (sin), ``n = 0..N``.

    ``lam`` and ``x`` broadcast; results have shape ``(N+1,) + broadcast shape``.
    Odd cosine and even sine moments vanish identically.
    """
    lam, x = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(x, dtype=float))
    sign = np.sign(lam)
    a = np.abs(lam)
    z = a * x
    small = z < switch_threshold(N)
    c = np.zeros((N + 1,) + z.shape)
    s = np.zeros_like(c)
    if np.any(small):
        cs, ss = _moments_taylor(N, a[small], x[small])
        c[:, small], s[:, small] = cs, ss
    if np.any(~small):
        cl, sl = _moments_upward(N, a[~small], x[~small])
        c[:, ~small], s[:, ~small] = cl, sl
    return c, s * sign


def trig_moment(n: int, lam: float, x: float, kind: str) -> float:
    """Single moment ``int_{-x}^{x} t^n cos(lam t) dt`` (``kind='cos'``) or the sine analogue."""
    if n < 0 or x < 0:
        raise ValueError("need n >= 0 and x >= 0")
    c, s = trig_moments(n, lam, x)
    if kind == "cos":
        return float(c[n])
    if kind == "sin":
        return float(s[n])
    raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")


def _solution_pair(ka: KernelApprox, x, lam, Kx=None):
    """``(C_N, S_N)`` at broadcast ``(x, lam)``, each of shape ``shape + (2,)``."""
    x, lam = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(lam, dtype=float))
    if Kx is None:
        Kx = kernel_coeffs_at(ka, x)  # (N+1,) + x.shape + (2, 2)
    c, s = trig_moments(ka.N, lam, x)
    cos, sin = np.cos(lam * x), np.sin(lam * x)
    # sum_n calK_n (c_n, s_n) and sum_n calK_n (-s_n, c_n)
    col0, col1 = Kx[..., :, 0], Kx[..., :, 1]
    kc = np.sum(col0 * c[..., None] + col1 * s[..., None], axis=0)
    ks = np.sum(-col0 * s[..., None] + col1 * c[..., None], axis=0)
    C = np.stack([cos, sin], axis=-1) + kc
    S = np.stack([-sin, cos], axis=-1) + ks
    return C, S


def eval_solution(ka: KernelApprox, x, lam, which: str = "C"):
    """``C_N(x, lam)`` or ``S_N(x, lam)``; shape ``broadcast(x, lam).shape + (2,)``."""
    C, S = _solution_pair(ka, x, lam)
    if which == "C":
        return C
    if which == "S":
        return S
    raise ValueError(f"which must be 'C' or 'S', got {which!r}")


def solve_ivp(ka: KernelApprox, a: complex, b: complex, lam: float, x=None):
    """``Y_N = a C_N + b S_N`` at ``x`` (default: the fit grid), shape ``x.shape + (2,)``."""
    x = ka.grid.x if x is None else x
    C, S = _solution_pair(ka, x, lam)
    return a * C + b * S


@dataclass(frozen=True)
class BoundaryCondition:
    """``U_left Y(0) + U_right Y(b) = 0``."""

    U_left: np.ndarray
    U_right: np.ndarray

    def __post_init__(self):
        L, R = np.asarray(self.U_left), np.asarray(self.U_right)
        if L.shape != (2, 2) or R.shape != (2, 2):
            raise ValueError("boundary matrices must be 2x2")
        if np.linalg.matrix_rank(np.hstack([L, R])) != 2:
            raise ValueError("boundary condition is degenerate: [U_left U_right] must have rank 2")
        object.__setattr__(self, "U_left", L)
        object.__setattr__(self, "U_right", R)

    @classmethod
    def dirichlet_first(cls) -> "BoundaryCondition":
        """``y1(0) = y1(b) = 0``."""
        return cls(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]))


def characteristic_det(ka: KernelApprox, bc: BoundaryCondition, lam):
    """``det(U_left + U_right [C_N(b, lam) | S_N(b, lam)])``, vectorised over ``lam``."""
    lam = np.asarray(lam, dtype=float)
    Kb = ka.calK[:, -1][(slice(None),) + (None,) * lam.ndim]
    C, S = _solution_pair(ka, np.full(lam.shape, ka.b), lam, Kx=Kb)
    Mfun = np.stack([C, S], axis=-1)  # columns C_N, S_N
    det = np.linalg.det(bc.U_left + bc.U_right @ Mfun)
    return det if det.ndim else det[()]


@dataclass
class Spectrum:
    """Located real eigenvalues with their residuals and brackets."""

    eigenvalues: np.ndarray
    index: np.ndarray
    residual: np.ndarray
    brackets: np.ndarray
    iterations: np.ndarray
    phase: complex = 1.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "lambda", "abs_det", "bracket_lo", "bracket_hi"])
        for n, lam, r, (lo, hi) in zip(self.index, self.eigenvalues, self.residual, self.brackets):
            w.writerow([int(n), f"{lam:.17g}", f"{r:.17g}", f"{lo:.17g}", f"{hi:.17g}"])
        return buf.getvalue()


def index_roots(roots: np.ndarray) -> np.ndarray:
    """Nonnegative roots numbered 0, 1, 2, ...; negative roots -1, -2, ... outward."""
    idx = np.empty(roots.size, dtype=int)
    neg = roots < 0
    idx[~neg] = np.arange(np.count_nonzero(~neg))
    idx[neg] = -np.arange(np.count_nonzero(neg), 0, -1)
    return idx


def find_eigenvalues(
    ka: KernelApprox,
    bc: BoundaryCondition,
    lam_min: float,
    lam_max: float,
    scan_step: float | None = None,
    xtol: float = 1e-14,
) -> Spectrum:
    """Real zeros of the characteristic function on ``[lam_min, lam_max]``.

    The determinant is rotated by the conjugate phase of its value at
    ``lam_min``; sign changes of the real part on the scan grid bracket the
    roots, and each bracket is refined by Brent's method (bisection with
    secant and inverse quadratic steps).

    Raises:
        ComplexCharacteristic: if the rotated values are not real to 1e-6.
        BracketLost: if a refined root falls outside its bracket.
    """
    if not lam_min < lam_max:
        raise ValueError("need lam_min < lam_max")
    step = np.pi / (4 * ka.b) if scan_step is None else scan_step
    n = int(np.floor((lam_max - lam_min) / step + 1e-9))
    grid = lam_min + step * np.arange(n + 1)
    if grid[-1] < lam_max:
        grid = np.append(grid, lam_max)
    vals = characteristic_det(ka, bc, grid)
    nonzero = np.nonzero(np.abs(vals) > 0)[0]
    phase = np.conj(vals[nonzero[0]]) / abs(vals[nonzero[0]]) if nonzero.size else 1.0
    rot = vals * phase
    scale = float(np.max(np.abs(rot))) if rot.size else 1.0
    if np.any(np.abs(rot.imag) > IMAG_TOL * np.maximum(np.abs(rot), 1e-300) + IMAG_TOL * 1e-6 * scale):
        raise ComplexCharacteristic("characteristic function is not real up to a constant phase on the scan")
    f = rot.real

    def real_det(lam):
        return float((characteristic_det(ka, bc, lam) * phase).real)

    roots, brackets, resid, iters = [], [], [], []
    for k in range(len(grid) - 1):
        lo, hi = grid[k], grid[k + 1]
        if f[k] == 0.0:
            root, it = lo, 0
        elif f[k] * f[k + 1] < 0:
            root, info = brentq(real_det, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, full_output=True)
            it = info.iterations
            if not lo <= root <= hi:
                raise BracketLost(f"refinement left [{lo}, {hi}]")
        else:
            continue
        roots.append(root)
        brackets.append((lo, hi))
        iters.append(it)
        resid.append(abs(characteristic_det(ka, bc, root)))
    if f.size and f[-1] == 0.0:
        roots.append(grid[-1])
        brackets.append((grid[-1], grid[-1]))
        iters.append(0)
        resid.append(0.0)
    roots = np.array(roots)
    # drop duplicates closer than step/10 (a root sitting exactly on a scan node)
    keep = np.ones(roots.size, dtype=bool)
    keep[1:] = np.diff(roots) > step / 10 if roots.size else keep[1:]
    roots = roots[keep]
    return Spectrum(
        roots,
        index_roots(roots),
        np.array(resid)[keep],
        np.array(brackets).reshape(-1, 2)[keep],
        np.array(iters, dtype=int)[keep],
        phase,
        {"scan_step": step, "lam_min": lam_min, "lam_max": lam_max, "scale": scale},
    )
