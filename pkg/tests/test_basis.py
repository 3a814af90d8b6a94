from __future__ import annotations

import warnings

import numpy as np
import pytest

from transmute.basis import (
    ParticularSolution,
    PotentialSpec,
    build_formal_powers,
    formal_powers,
    homogeneous_residual,
    particular_solution,
    recursive_integrals,
    spps_solution,
)
from transmute.errors import NonVanishingViolation, TruncationWarning
from transmute.grid import Grid
from transmute.oracle import ode_reference

from conftest import tanh_potential


def test_from_expressions_and_samples():
    pot = PotentialSpec.from_expressions("x^2", "tanh(x)", 1.0)
    p, q = pot.sample(np.array([0.0, 0.5]))
    assert np.allclose(p, [0.0, 0.25]) and np.allclose(q, [0.0, np.tanh(0.5)])
    xs = np.linspace(0, 1, 101)
    tab = PotentialSpec.from_samples(xs, xs**2, np.sin(xs))
    assert tab.b == 1.0
    assert abs(tab.sample(0.333)[1] - np.sin(0.333)) < 1e-8
    with pytest.raises(ValueError):
        PotentialSpec.from_samples(xs + 0.1, xs, xs)


def test_zero_potential_particular_solution_is_constant():
    g = Grid(1.0, 200)
    sol = particular_solution(PotentialSpec.zero(1.0), g, method="complex")
    assert abs(sol.norm_product - 1.0) <= 1e-12
    assert np.max(np.abs(sol.f - sol.f[0])) <= 1e-14
    assert np.max(np.abs(sol.g - sol.g[0])) <= 1e-14


def test_tanh_particular_solution(grid):
    sol = particular_solution(tanh_potential(), grid)
    assert sol.method == "exp"
    assert np.max(np.abs(sol.f - np.cosh(grid.x))) <= 1e-10
    assert np.max(np.abs(sol.g - 1 / np.cosh(grid.x))) <= 1e-10
    assert homogeneous_residual(sol, tanh_potential()) <= 1e-7


def test_complex_construction_matches_rk_oracle():
    pot = PotentialSpec(lambda x: 1.0, lambda x: 0.0, 1.0)
    g = Grid(1.0, 2000)
    sol = particular_solution(pot, g)
    assert sol.method == "complex"
    assert abs(sol.norm_product - 1.0) <= 1e-12
    assert homogeneous_residual(sol, pot) <= 1e-8
    # (f, g) is a complex multiple of the RK solution from (1, i)
    ref = ode_reference(pot, 0.0, (1.0, 1j), steps=4000)
    s = sol.f[0]
    assert np.max(np.abs(sol.f - s * ref.Y[::2, 0])) <= 1e-10
    assert np.max(np.abs(sol.g - s * ref.Y[::2, 1])) <= 1e-10


def test_vanishing_solution_is_rejected():
    g = Grid(1.0, 10)
    f = np.linspace(1.0, -1.0, 11)
    f[5] = 0.0
    with pytest.raises(NonVanishingViolation):
        ParticularSolution(g, f, np.ones(11)).check()


def test_recursive_integrals_zero_potential():
    g = Grid(1.0, 100)
    x = g.x
    sol = particular_solution(PotentialSpec.zero(1.0), g, method="exp")
    ri = recursive_integrals(sol, PotentialSpec.zero(1.0), 3)
    tol = 1e-14
    assert np.max(np.abs(ri.X[0])) <= tol and np.max(np.abs(ri.Y[0] - 1)) <= tol
    assert np.max(np.abs(ri.Z[0] - x)) <= tol
    assert np.max(np.abs(ri.X[1] + x)) <= tol and np.max(np.abs(ri.Y[1])) <= tol
    assert np.max(np.abs(ri.Xt[0] - 1)) <= tol and np.max(np.abs(ri.Yt[1] - x)) <= tol
    assert np.max(np.abs(ri.Xt[2] + x**2)) <= tol


@pytest.mark.parametrize("method", ["exp", "complex"])
def test_zero_potential_formal_powers_are_monomials(method):
    g = Grid(1.0, 2000)
    fp = build_formal_powers(PotentialSpec.zero(1.0), g, 10, method=method)
    for k in range(11):
        mono = g.x**k
        assert np.max(np.abs(fp.Phi[k] - np.stack([mono, 0 * mono], -1))) <= 1e-10
        assert np.max(np.abs(fp.Psi[k] - np.stack([0 * mono, mono], -1))) <= 1e-10


def test_formal_powers_independent_of_particular_solution(grid):
    pot = tanh_potential()
    a = build_formal_powers(pot, grid, 6, method="exp")
    b = build_formal_powers(pot, grid, 6, method="complex")
    assert b.imag_residue <= 1e-12
    assert np.max(np.abs(a.Phi - b.Phi)) <= 1e-12
    assert np.max(np.abs(a.Psi - b.Psi)) <= 1e-12


def test_formal_power_initial_values_and_lorentz_structure(grid):
    fp = build_formal_powers(tanh_potential(), grid, 8, method="complex")
    assert np.allclose(fp.Phi[0, 0], [1.0, 0.0], atol=1e-14)
    assert np.allclose(fp.Psi[0, 0], [0.0, 1.0], atol=1e-14)
    assert np.max(np.abs(fp.Phi[1:, 0])) <= 1e-14
    # p = 0: Phi_k = (phi_k, 0), Psi_k = (0, psi_k)
    assert np.max(np.abs(fp.Phi[..., 1])) <= 1e-12
    assert np.max(np.abs(fp.Psi[..., 0])) <= 1e-12


def test_intermediates_envelope_tanh(grid):
    # measured growth constant of max|X^(n)|, |Y^(n)| against C^n n!-free envelope
    sol = particular_solution(tanh_potential(), grid)
    ri = recursive_integrals(sol, tanh_potential(), 6)
    for arr in (ri.X, ri.Y, ri.Z, ri.Xt, ri.Yt, ri.Zt):
        assert np.all(np.isfinite(arr))
        sizes = np.max(np.abs(arr), axis=1)
        assert np.all(sizes <= 2.0 ** np.arange(7) + 1)


def test_degree_growth_near_zero(grid):
    fp = build_formal_powers(tanh_potential(), grid, 6)
    xs = grid.x[4:11]
    for k in range(1, 7):
        # Phi_k(x) = x^k (1 + O(x^2)) near 0; the first nodes carry the start-up
        # quadrature panel, whose error is invisible in absolute terms but not relative to x^k
        ratio = np.abs(fp.Phi[k, 4:11, 0]) / xs**k
        assert np.all(np.abs(ratio - 1) <= 0.05)


def test_spps_zero_potential_is_trigonometric():
    g = Grid(1.0, 500)
    fp = build_formal_powers(PotentialSpec.zero(1.0), g, 40)
    Y1, Y2 = spps_solution(fp, np.pi)
    x = g.x
    # limited by the nested quadrature at M = 500, not by truncation
    assert np.max(np.abs(Y1 - np.stack([np.cos(np.pi * x), np.sin(np.pi * x)], -1))) <= 1e-10
    assert np.max(np.abs(Y2 - np.stack([-np.sin(np.pi * x), np.cos(np.pi * x)], -1))) <= 1e-10


def test_spps_initial_values_and_lambda_zero(grid):
    fp = build_formal_powers(tanh_potential(), grid, 4, method="complex")
    Y1, Y2 = spps_solution(fp, 0.0)
    sol = fp.sol
    assert np.array_equal(Y1[0], np.array([sol.f[0], 0.0]))
    assert np.array_equal(Y2[0], np.array([0.0, sol.g[0]]))
    # only the n = 0 term survives: Y1 = (f, 0), and g(0) Y1 is the real solution (cosh x, 0)
    assert np.max(np.abs(Y1 - np.stack([sol.f, 0 * sol.f], -1))) <= 1e-15
    assert np.max(np.abs(sol.g[0] * Y1 - np.stack([np.cosh(grid.x), 0 * grid.x], -1))) <= 1e-10


def test_spps_tanh_matches_rk(grid):
    fp = build_formal_powers(tanh_potential(), grid, 40)
    Y1, _ = spps_solution(fp, 2.0, 40)
    ref = ode_reference(tanh_potential(), 2.0, (1.0, 0.0), steps=2000)
    assert np.max(np.abs(Y1 - ref.Y)) <= 1e-9


def test_spps_truncation_warning(grid):
    fp = build_formal_powers(tanh_potential(), grid, 5)
    with pytest.warns(TruncationWarning):
        spps_solution(fp, 30.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        spps_solution(fp, 0.0)
    with pytest.raises(ValueError):
        spps_solution(fp, 1.0, 6)


def test_formal_powers_order_check(grid):
    sol = particular_solution(tanh_potential(), grid)
    ri = recursive_integrals(sol, tanh_potential(), 3)
    with pytest.raises(ValueError):
        formal_powers(ri, 4)
