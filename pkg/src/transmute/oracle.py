"""Independent reference solutions used to validate the kernel approximation.

Nothing here shares code with the formal-power pipeline beyond the potential
description and the 2x2 helpers:

* ``ode_reference`` -- RK4 with Richardson extrapolation for ``B Y' + Q Y = lambda Y``;
* ``goursat_successive`` / ``cauchy_successive`` -- successive approximations
  for the kernel integral equations on a characteristic mesh;
* ``exact_tanh_kernels`` -- closed-form kernels for ``p = 0, q = tanh x``;
* ``shooting_eigenvalues`` -- high-order adaptive shooting for real spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad, solve_ivp

from .basis import PotentialSpec
from .errors import CompatibilityViolation, DomainViolation, NonConvergence, StepTooCoarse
from .mat2 import B, frob_norm, proj

STEP_GUARD = 0.1
SERIES_TOL = 1e-17


# ---------------------------------------------------------------------------
# RK4 reference


def _dirac_rhs_mats(pot: PotentialSpec, xs, lam):
    """``B (Q(x) - lambda)`` at nodes ``xs`` for each ``lambda``: shape ``(len(xs), L, 2, 2)``."""
    Q = pot.matrix(xs)[:, None]
    lam = np.asarray(lam)[None, :, None, None]
    return B @ (Q - lam * np.eye(2))


def _rk4(pot, lam, ic, steps, b):
    h = b / steps
    xs = np.linspace(0.0, b, 2 * steps + 1)
    A = _dirac_rhs_mats(pot, xs, lam)
    Y = np.broadcast_to(np.asarray(ic, dtype=complex), (len(lam), 2)).copy()
    out = np.empty((steps + 1,) + Y.shape, dtype=complex)
    out[0] = Y
    mv = lambda M, v: np.einsum("lab,lb->la", M, v)  # noqa: E731
    for k in range(steps):
        a0, a1, a2 = A[2 * k], A[2 * k + 1], A[2 * k + 2]
        k1 = mv(a0, Y)
        k2 = mv(a1, Y + 0.5 * h * k1)
        k3 = mv(a1, Y + 0.5 * h * k2)
        k4 = mv(a2, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = Y
    return out


@dataclass
class ODEReference:
    """Richardson-extrapolated RK4 samples at ``x`` (shape ``(steps+1,) + lam.shape + (2,)``)."""

    x: np.ndarray
    lam: np.ndarray
    Y: np.ndarray
    error_estimate: float


def default_steps(b: float, lam_max: float, per_unit: float = 0.005, minimum: int = 2000) -> int:
    return max(minimum, int(np.ceil(abs(lam_max) * b / per_unit)))


def ode_reference(pot: PotentialSpec, lam, ic, steps: int | None = None, b: float | None = None) -> ODEReference:
    """Reference solution of ``B Y' + Q Y = lambda Y``, ``Y(0) = ic``.

    Runs classical RK4 with ``steps`` and ``2*steps`` uniform steps and
    combines them as ``(16 Y_fine - Y_coarse)/15`` at the coarse nodes. The
    reported error estimate is ``max |Y_fine - Y_coarse| / 15``.

    Raises:
        StepTooCoarse: if ``|lambda| * b / steps >= 0.1``.
    """
    b = pot.b if b is None else b
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if steps is None:
        steps = default_steps(b, float(np.max(np.abs(lam_arr))))
    if np.max(np.abs(lam_arr)) * b / steps >= STEP_GUARD:
        raise StepTooCoarse(f"|lambda| h = {np.max(np.abs(lam_arr)) * b / steps:.3g} >= {STEP_GUARD}")
    coarse = _rk4(pot, lam_arr, ic, steps, b)
    fine = _rk4(pot, lam_arr, ic, 2 * steps, b)[::2]
    Y = (16.0 * fine - coarse) / 15.0
    err = float(np.max(np.abs(fine - coarse))) / 15.0
    if np.ndim(lam) == 0:
        Y = Y[:, 0]
    return ODEReference(np.linspace(0.0, b, steps + 1), np.asarray(lam), Y, err)


# ---------------------------------------------------------------------------
# Characteristic mesh and successive approximations


@dataclass
class TriMesh:
    """Field ``H(xi, eta)`` on nodes ``xi = i h``, ``eta = j h`` with ``i + j <= n``.

    Stored as a square ``(n+1, n+1, 2, 2)`` array; entries with ``i + j > n``
    are unused and set to zero.
    """

    b: float
    n: int
    H: np.ndarray = field(repr=False)
    iterations: int = 0
    increments: list = field(default_factory=list, repr=False)

    @property
    def h(self) -> float:
        return self.b / self.n

    @property
    def mask(self) -> np.ndarray:
        i, j = np.indices((self.n + 1, self.n + 1))
        return i + j <= self.n

    def kernel(self):
        """``(x, t, K)`` arrays over mesh nodes: ``x = (i+j) h``, ``t = (i-j) h``."""
        i, j = np.nonzero(self.mask)
        return (i + j) * self.h, (i - j) * self.h, self.H[i, j]

    def kernel_row(self, k: int):
        """``K(x_k, t)`` on the ``k + 1`` mesh points of the line ``x = k h``."""
        i = np.arange(k + 1)
        return (i - (k - i)) * self.h, self.H[i, k - i]

    def max_norm(self) -> float:
        return float(np.max(frob_norm(self.H[self.mask])))


def _mesh_BQ(pot: PotentialSpec, n: int, h: float):
    i, j = np.indices((n + 1, n + 1))
    x = np.minimum(i + j, n) * h
    return B @ pot.matrix(x)


def _iterate(H0, step, mask, iterations, tol):
    H = H0.copy()
    prev = H0
    incs = [float(np.max(frob_norm(H0[mask])))]
    growth = 0
    for it in range(1, iterations + 1):
        nxt = step(prev)
        nxt[~mask] = 0
        size = float(np.max(frob_norm(nxt[mask])))
        H += nxt
        incs.append(size)
        if size < tol:
            return H, it, incs
        growth = growth + 1 if size > incs[-2] else 0
        if growth >= 3:
            raise NonConvergence(f"increments grew for 3 consecutive iterations (last {size:.3e})")
        prev = nxt
    return H, iterations, incs


def goursat_successive(pot: PotentialSpec, E1, E2, n: int = 400, iterations: int = 200, tol: float = 1e-13) -> TriMesh:
    """Solve the Goursat integral equation for ``H`` by successive approximations.

    ``E1`` and ``E2`` map arrays of ``x`` to ``(..., 2, 2)``. ``E1`` must
    anticommute and ``E2`` commute with ``B``. Integrals use the cumulative
    trapezoid rule along mesh lines.

    Raises:
        CompatibilityViolation: if the data are not compatible to 1e-10.
        NonConvergence: if increments grow three times in a row.
    """
    h = pot.b / n
    s = np.arange(n + 1) * h
    e1, e2 = np.asarray(E1(s)), np.asarray(E2(s))
    scale = max(1.0, float(np.max(frob_norm(e1))), float(np.max(frob_norm(e2))))
    if np.max(frob_norm(proj(e1, "-"))) > 1e-10 * scale or np.max(frob_norm(proj(e2, "+"))) > 1e-10 * scale:
        raise CompatibilityViolation("need E1 anticommuting and E2 commuting with B")
    BQ = _mesh_BQ(pot, n, h)
    i, j = np.indices((n + 1, n + 1))
    mask = i + j <= n
    H0 = -0.5 * (B @ e1)[:, None] - 0.5 * (B @ e2)[None, :]
    H0 = np.where(mask[..., None, None], H0, 0.0)

    def step(Hp):
        f_u = BQ @ proj(Hp, "+")
        f_v = BQ @ proj(Hp, "-")
        return cumulative_trapezoid(f_u, dx=h, axis=0, initial=0) + cumulative_trapezoid(f_v, dx=h, axis=1, initial=0)

    H, it, incs = _iterate(H0, step, mask, iterations, tol)
    return TriMesh(pot.b, n, H, it, incs)


def cauchy_successive(pot: PotentialSpec, F, n: int = 400, iterations: int = 200, tol: float = 1e-13) -> TriMesh:
    """Solve the Cauchy integral equation (data ``K(b, t) = F(t)``) on the mesh.

    ``F`` is either a callable on ``[-b, b]`` or an array of its values at
    ``t_k = (2k - n) h``, ``k = 0..n``.
    """
    h = pot.b / n
    tk = (2 * np.arange(n + 1) - n) * h
    Fv = np.asarray(F(tk)) if callable(F) else np.asarray(F)
    BQ = _mesh_BQ(pot, n, h)
    i, j = np.indices((n + 1, n + 1))
    mask = i + j <= n
    # P+[F](2 xi - b) sits at index i, P-[F](b - 2 eta) at index n - j
    H0 = proj(Fv, "+")[:, None] + proj(Fv, "-")[::-1][None, :]
    H0 = np.where(mask[..., None, None], H0, 0.0)
    cols = np.arange(n + 1)

    def step(Hp):
        Cu = cumulative_trapezoid(BQ @ proj(Hp, "+"), dx=h, axis=0, initial=0)
        Cv = cumulative_trapezoid(BQ @ proj(Hp, "-"), dx=h, axis=1, initial=0)
        # int_xi^{b-eta} = C[n-j, j] - C[i, j];  int_eta^{b-xi} = C[i, n-i] - C[i, j]
        top_u = Cu[n - cols, cols][None, :]
        top_v = Cv[cols, n - cols][:, None]
        return -(top_u - Cu) - (top_v - Cv)

    H, it, incs = _iterate(H0, step, mask, iterations, tol)
    return TriMesh(pot.b, n, H, it, incs)


def transmutation_kernel_mesh(pot: PotentialSpec, n: int = 400, **kw) -> TriMesh:
    """Kernel of the transmutation operator: Goursat data ``E1 = -Q``, ``E2 = 0``."""
    return goursat_successive(pot, lambda s: -pot.matrix(s), lambda s: np.zeros(np.shape(s) + (2, 2)), n, **kw)


# ---------------------------------------------------------------------------
# Closed-form kernels for q = tanh x


def _g1(w):
    """``sum_k (w/4)^k / (k! (k+1)!)`` = ``2 I_1(sqrt w)/sqrt w``, truncated below 1e-17."""
    w = np.asarray(w, dtype=float)
    term = np.ones_like(w)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * (w / 4.0) / (k * (k + 1))
        total = total + term
        if np.all(np.abs(term) < SERIES_TOL * np.abs(total)) or k > 200:
            return total


def _g1_prime(w):
    """Derivative of ``_g1`` in ``w``: ``sum_k k (w/4)^(k-1) / (4 k! (k+1)!)``."""
    w = np.asarray(w, dtype=float)
    term = np.full_like(w, 1.0 / 8.0)  # k = 1
    total = term.copy()
    k = 1
    while True:
        k += 1
        term = term * (w / 4.0) / ((k - 1) * (k + 1))
        total = total + term
        if np.all(np.abs(term) < SERIES_TOL * np.abs(total)) or k > 200:
            return total


def bessel_i0(z):
    """``I_0(z)`` from its power series."""
    w = np.asarray(z, dtype=float) ** 2
    term = np.ones_like(w)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * (w / 4.0) / (k * k)
        total = total + term
        if np.all(np.abs(term) < SERIES_TOL * np.abs(total)) or k > 200:
            return total


def bessel_i1(z):
    """``I_1(z)`` from its power series."""
    z = np.asarray(z, dtype=float)
    return 0.5 * z * _g1(z * z)


def k_cosh(x, t):
    """Kernel of ``T_f`` for ``f = cosh``: ``(x + t) G(x^2 - t^2) / 4``.

    Equal to ``sqrt(w) I_1(sqrt(w)) / (2 (x - t))`` with ``w = x^2 - t^2``;
    the series form has no removable singularity at ``t = x``.
    """
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    return 0.25 * (x + t) * _g1(x * x - t * t)


def _dt_k_cosh(s, t):
    w = s * s - t * t
    return 0.25 * _g1(w) - 0.5 * t * (s + t) * _g1_prime(w)


def k_sech(x: float, t: float, tol: float = 1e-13) -> float:
    """Kernel of ``T_{1/f}`` for ``f = cosh``.

    ``K_sech(x, t) = -(1/cosh x) int_{-t}^{x} d/dt K_cosh(s, t) cosh(s) ds``,
    integrated adaptively; the integrand is smooth on the whole range.
    """
    val, _ = quad(lambda s: float(_dt_k_cosh(s, t)) * np.cosh(s), -t, x, epsabs=tol, epsrel=tol, limit=200)
    return -val / np.cosh(x)


def exact_tanh_kernels(x, t, b: float = 2.0):
    """``(K_cosh(x, t), K_sech(x, t))`` for ``(x, t)`` in the triangle ``|t| <= x <= b``.

    Raises:
        DomainViolation: outside the triangle or for ``b > 2``.
    """
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    if b > 2.0 or np.any(x < 0) or np.any(x > b + 1e-12) or np.any(np.abs(t) > x + 1e-12):
        raise DomainViolation("closed-form tanh kernels need |t| <= x <= b <= 2")
    x, t = np.broadcast_arrays(x, t)
    ks = np.vectorize(k_sech, otypes=[float])(x, t)
    kc = k_cosh(x, t)
    return (float(kc), float(ks)) if kc.ndim == 0 else (kc, ks)


def tanh_kernel_matrix(x, t):
    """Full 2x2 kernel ``diag(K_cosh, K_sech)`` with broadcasting."""
    kc, ks = exact_tanh_kernels(x, t)
    kc, ks = np.asarray(kc), np.asarray(ks)
    out = np.zeros(kc.shape + (2, 2))
    out[..., 0, 0] = kc
    out[..., 1, 1] = ks
    return out


# ---------------------------------------------------------------------------
# Shooting oracle for real spectra


def _shoot(pot: PotentialSpec, lam: np.ndarray, y0, row, rtol: float):
    """Value ``row . Y(b, lambda)`` for the solution with ``Y(0) = y0``, vectorised over ``lambda``."""
    L = lam.size

    def rhs(x, y):
        Y = y.reshape(2, L)
        p, q = pot.sample(x)
        # Y' = B (Q - lambda) Y:  y1' = q y1 - (p + lambda) y2,  y2' = (lambda - p) y1 - q y2
        return np.concatenate([q * Y[0] - (p + lam) * Y[1], (lam - p) * Y[0] - q * Y[1]])

    y_init = np.concatenate([np.full(L, y0[0], dtype=float), np.full(L, y0[1], dtype=float)])
    sol = solve_ivp(rhs, (0.0, pot.b), y_init, method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    Y = sol.y[:, -1].reshape(2, L)
    return row[0] * Y[0] + row[1] * Y[1]


def shooting_eigenvalues(
    pot: PotentialSpec,
    y0,
    row,
    lam_min: float,
    lam_max: float,
    step: float,
    rtol: float = 1e-13,
    xtol: float = 1e-13,
    max_iter: int = 200,
):
    """Real zeros of ``lambda -> row . Y(b, lambda)`` with ``Y(0) = y0`` fixed.

    Suits separated conditions where the left condition fixes the initial
    vector. Brackets from a uniform scan are refined together with a
    vectorised Illinois false-position iteration, one ODE solve per sweep.
    """
    grid = np.arange(lam_min, lam_max + 0.5 * step, step)
    vals = _shoot(pot, grid, y0, row, rtol)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = grid[vals == 0]
    a, b_ = grid[idx].copy(), grid[idx + 1].copy()
    fa, fb = vals[idx].copy(), vals[idx + 1].copy()
    side = np.zeros(a.size, dtype=int)
    for _ in range(max_iter):
        if a.size == 0 or np.all(b_ - a <= xtol * np.maximum(1.0, np.abs(a))):
            break
        c = (a * fb - b_ * fa) / (fb - fa)
        c = np.where((c > a) & (c < b_), c, 0.5 * (a + b_))
        fc = _shoot(pot, c, y0, row, rtol)
        left = np.sign(fc) == np.sign(fa)
        # Illinois modification: halve the stale endpoint value after two same-side updates
        fb = np.where(left & (side == 1), 0.5 * fb, fb)
        fa = np.where(~left & (side == -1), 0.5 * fa, fa)
        a, fa = np.where(left, c, a), np.where(left, fc, fa)
        b_, fb = np.where(left, b_, c), np.where(left, fb, fc)
        side = np.where(left, 1, -1)
        hit = fc == 0
        a, b_ = np.where(hit, c, a), np.where(hit, c, b_)
    roots = np.sort(np.concatenate([0.5 * (a + b_), exact]))
    return roots
