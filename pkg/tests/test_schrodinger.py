from __future__ import annotations

import numpy as np
import pytest

from transmute.errors import NonVanishingViolation
from transmute.fit import fit_kernel, kernel_eval
from transmute.grid import Grid, cumint
from transmute.oracle import exact_tanh_kernels
from transmute.schrodinger import SchrodFit, schrod_fit, schrod_reduce

ONE = lambda x: np.ones_like(x)  # noqa: E731


@pytest.fixture(scope="module")
def cosh_problem():
    return schrod_reduce(ONE, Grid(1.0, 2000), 10)


@pytest.fixture(scope="module")
def cosh_fit(cosh_problem):
    return schrod_fit(cosh_problem)


def test_free_equation_gives_monomials():
    sp = schrod_reduce(lambda x: 0.0 * x, Grid(1.0, 1000), 6)
    assert sp.h == 0.0 and np.max(np.abs(sp.f - 1)) == 0.0
    x = sp.grid.x
    for k in range(7):
        assert np.max(np.abs(sp.phi[k] - x**k)) <= 1e-11
        assert np.max(np.abs(sp.psi[k] - x**k)) <= 1e-11
    fit = schrod_fit(sp)
    assert np.array_equal(fit.a, np.zeros(7)) and np.array_equal(fit.d, np.zeros(7))


def test_reduction_for_constant_potential(cosh_problem):
    x = cosh_problem.grid.x
    assert cosh_problem.h == 0.0
    assert np.max(np.abs(cosh_problem.f - np.cosh(x))) <= 1e-13
    assert np.max(np.abs(cosh_problem.q - np.tanh(x))) <= 1e-13
    assert cosh_problem.residual <= 1e-10
    assert np.all(cosh_problem.fp.Phi[..., 1] == 0) and np.all(cosh_problem.fp.Psi[..., 0] == 0)


def test_wave_functions_at_t_zero(cosh_problem):
    x = cosh_problem.grid.x[::50]
    zero = np.zeros_like(x)
    for n in range(1, 6):
        assert np.max(np.abs(cosh_problem.u(2 * n - 1, x, zero) - cosh_problem.phi[n, ::50])) <= 1e-15
        assert np.max(np.abs(cosh_problem.u(2 * n, x, zero))) == 0.0
        assert np.max(np.abs(cosh_problem.v(2 * n, x, zero))) == 0.0


def test_kernels_match_closed_forms(cosh_fit):
    xs = np.linspace(1 / 12, 1, 12)
    s = np.linspace(-1, 1, 21)
    X, T = xs[:, None] * np.ones_like(s), xs[:, None] * s
    kc, ks = exact_tanh_kernels(X, T)
    assert np.max(np.abs(cosh_fit.kf(X, T) - kc)) <= 1e-8
    assert np.max(np.abs(cosh_fit.k1f(X, T) - ks)) <= 1e-8
    assert cosh_fit.ridge == 0.0


def test_error_decreases_with_order(cosh_problem):
    x, t = np.array([0.9]), np.array([0.2])
    kc, _ = exact_tanh_kernels(x, t)
    errs = [np.max(np.abs(schrod_fit(cosh_problem, N).kf(x, t) - kc)) for N in (2, 4, 6, 8)]
    assert all(b < a / 10 for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("q1_value", [1.0, -10.0])
def test_goursat_traces(q1_value):
    q1 = lambda x: q1_value * np.ones_like(x)  # noqa: E731
    sp = schrod_reduce(q1, Grid(1.0, 2000), 10)
    fit = schrod_fit(sp)
    x = sp.grid.x[1:]
    tol = 1e-8 if q1_value > 0 else 1e-4
    half_int = 0.5 * cumint(sp.grid, q1(sp.grid.x))[1:]
    assert np.max(np.abs(fit.kf(x, x) - (sp.h / 2 + half_int))) <= tol
    assert np.max(np.abs(fit.kf(x, -x) - sp.h / 2)) <= tol


def test_oscillating_particular_solution_switches_to_complex():
    sp = schrod_reduce(lambda x: -10.0 * np.ones_like(x), Grid(1.0, 2000), 6)
    assert sp.h == 1j and np.iscomplexobj(sp.f)
    assert np.min(np.abs(sp.f)) >= 1 / np.sqrt(10) - 1e-9  # |cos + i sin / sqrt(10)|
    with pytest.raises(NonVanishingViolation):
        schrod_reduce(lambda x: -10.0 * np.ones_like(x), Grid(1.0, 2000), 4, h=0.0)
    fit = schrod_fit(sp)
    assert np.iscomplexobj(fit.a) and fit.to_csv(3, 3).startswith("x,t,re_K_f,im_K_f")


def test_agrees_with_full_dirac_fit(cosh_problem, cosh_fit):
    full = fit_kernel(cosh_problem.dirac, 10, cosh_problem.grid, fp=cosh_problem.fp)
    off = np.max(np.abs(full.calK[..., 0, 1])) + np.max(np.abs(full.calK[..., 1, 0]))
    assert off <= 10 * full.residual
    x = np.linspace(0.05, 1, 20)
    t = 0.4 * x
    K = kernel_eval(full, x, t)
    assert np.max(np.abs(K[:, 0, 0] - cosh_fit.kf(x, t))) <= 1e-8
    assert np.max(np.abs(K[:, 1, 1] - cosh_fit.k1f(x, t))) <= 1e-8


def test_csv_output(cosh_fit):
    text = cosh_fit.to_csv(nx=3, nt=3)
    lines = text.splitlines()
    assert lines[0] == "x,t,K_f,K_1/f"
    assert len(lines) == 10
    row = lines[1].split(",")
    assert row[:2] == ["0", "0"] and abs(float(row[2])) <= 1e-8
    assert isinstance(cosh_fit, SchrodFit) and cosh_fit.to_csv(3, 3) == text


def test_argument_checks(cosh_problem):
    with pytest.raises(ValueError):
        schrod_reduce(ONE, Grid(1.0, 100), -1)
    with pytest.raises(ValueError):
        schrod_fit(cosh_problem, 0)
