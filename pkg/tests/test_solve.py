from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from transmute.basis import PotentialSpec
from transmute.errors import ComplexCharacteristic
from transmute.fit import fit_kernel, kernel_l2_error
from transmute.grid import Grid
from transmute.oracle import ode_reference
from transmute.solve import (
    BoundaryCondition,
    Spectrum,
    _moments_taylor,
    _moments_upward,
    characteristic_det,
    eval_solution,
    find_eigenvalues,
    index_roots,
    solve_ivp,
    switch_threshold,
    trig_moment,
    trig_moments,
)


@pytest.fixture(scope="module")
def zero_fit():
    return fit_kernel(PotentialSpec.zero(1.0), 4, Grid(1.0, 400))


def test_moment_closed_forms():
    lam, x = 3.7, 0.9
    assert trig_moment(0, lam, x, "cos") == pytest.approx(2 * np.sin(lam * x) / lam, rel=1e-14)
    s1 = 2 * (np.sin(lam * x) - lam * x * np.cos(lam * x)) / lam**2
    assert trig_moment(1, lam, x, "sin") == pytest.approx(s1, rel=1e-14)
    assert trig_moment(0, 0.0, x, "cos") == pytest.approx(2 * x, rel=1e-15)
    assert trig_moment(1, lam, x, "cos") == 0.0 and trig_moment(2, lam, x, "sin") == 0.0


@pytest.mark.parametrize("n", range(0, 7))
def test_moments_at_zero_frequency(n):
    c, s = trig_moments(n, 0.0, 0.8)
    expected = 2 * 0.8 ** (n + 1) / (n + 1) if n % 2 == 0 else 0.0
    assert c[n] == pytest.approx(expected, rel=1e-15, abs=0)
    assert np.all(s == 0)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10), st.floats(-40, 40), st.floats(0, 1.5))
def test_moments_match_quadrature(n, lam, x):
    c, s = trig_moments(n, lam, x)
    qc, _ = quad(lambda t: t**n * np.cos(lam * t), -x, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    qs, _ = quad(lambda t: t**n * np.sin(lam * t), -x, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    scale = 2 * x ** (n + 1) + 1e-300
    assert abs(c[n] - qc) <= 1e-11 * scale
    assert abs(s[n] - qs) <= 1e-11 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10), st.floats(0.01, 30), st.floats(0.01, 1.0))
def test_moment_parity_in_lambda(n, lam, x):
    cp, sp = trig_moments(n, lam, x)
    cm, sm = trig_moments(n, -lam, x)
    assert np.array_equal(cp, cm)
    assert np.array_equal(sp, -sm)


@pytest.mark.parametrize("N", [1, 4, 6, 10])
def test_branch_agreement_near_threshold(N):
    theta = switch_threshold(N)
    x = 0.9
    lam = np.linspace(0.8 * theta, 1.25 * theta, 41) / x
    ct, st_ = _moments_taylor(N, lam, np.full_like(lam, x))
    cu, su = _moments_upward(N, lam, np.full_like(lam, x))
    assert np.max(np.abs(ct - cu)) <= 1e-12
    assert np.max(np.abs(st_ - su)) <= 1e-12


def test_trig_moment_arguments():
    with pytest.raises(ValueError):
        trig_moment(-1, 1.0, 1.0, "cos")
    with pytest.raises(ValueError):
        trig_moment(1, 1.0, -1.0, "cos")
    with pytest.raises(ValueError):
        trig_moment(1, 1.0, 1.0, "tan")


def test_zero_potential_solutions_are_exact_trig(zero_fit):
    x = np.linspace(0, 1, 11)
    lam = 7.3
    C = eval_solution(zero_fit, x, lam, "C")
    S = eval_solution(zero_fit, x, lam, "S")
    assert np.array_equal(C, np.stack([np.cos(lam * x), np.sin(lam * x)], axis=-1))
    assert np.array_equal(S, np.stack([-np.sin(lam * x), np.cos(lam * x)], axis=-1))
    with pytest.raises(ValueError):
        eval_solution(zero_fit, x, lam, "T")


@settings(max_examples=30, deadline=None)
@given(st.floats(-200, 200), st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_ivp_initial_value_is_exact(tanh_fit10, lam, a, b):
    Y0 = solve_ivp(tanh_fit10, a, b, lam, x=0.0)
    assert Y0[0] == a and Y0[1] == b


def test_ivp_combination(tanh_fit10):
    x = np.linspace(0, 1, 7)
    assert np.array_equal(solve_ivp(tanh_fit10, 1, 0, 3.0, x), eval_solution(tanh_fit10, x, 3.0, "C"))
    assert np.array_equal(solve_ivp(tanh_fit10, 0, 1, 3.0, x), eval_solution(tanh_fit10, x, 3.0, "S"))


def test_cosine_solution_against_rk_at_lambda_50(tanh_fit10, tanh_pot):
    ref = ode_reference(tanh_pot, 50.0, (1.0, 0.0), steps=40000)
    C = eval_solution(tanh_fit10, 1.0, 50.0, "C")
    assert np.max(np.abs(C - ref.Y[-1])) <= 1e-10


def test_ivp_against_rk_at_lambda_10(tanh_fit10, tanh_pot, tanh_reference):
    # |Y - Y_N|(x) <= (|a| + |b|) 2 sqrt(x) eps(x), eps the per-x L2 kernel error
    ref = ode_reference(tanh_pot, 10.0, (1.0, 1.0), steps=4000)
    idx = np.arange(400, 4001, 400)
    xs = ref.x[idx]
    eps = kernel_l2_error(tanh_fit10, tanh_reference, xs, nodes=32)
    Y = solve_ivp(tanh_fit10, 1.0, 1.0, 10.0, x=xs)
    err = np.linalg.norm(Y - ref.Y[idx], axis=-1)
    assert np.all(err <= 2 * 2 * np.sqrt(xs) * eps + 10 * ref.error_estimate)
    assert np.max(err) <= 1e-9


def test_characteristic_det_zero_potential(zero_fit):
    bc = BoundaryCondition.dirichlet_first()
    lam = np.linspace(-20, 20, 101)
    # U_left + U_right [C|S] = [[1, 0], [cos, -sin]] -> det = -sin(lam b)
    assert np.allclose(characteristic_det(zero_fit, bc, lam), -np.sin(lam), atol=1e-15)
    assert np.ndim(characteristic_det(zero_fit, bc, 2.0)) == 0


def test_characteristic_det_is_continuous(tanh_fit10):
    bc = BoundaryCondition.dirichlet_first()
    lam = np.linspace(-50, 50, 37)
    d0 = characteristic_det(tanh_fit10, bc, lam)
    for h in (1e-3, 1e-5, 1e-7):
        assert np.max(np.abs(characteristic_det(tanh_fit10, bc, lam + h) - d0)) <= 10 * h


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        BoundaryCondition(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        BoundaryCondition(np.array([[1.0, 0.0], [2.0, 0.0]]), np.zeros((2, 2)))


def test_dirichlet_eigenvalues_zero_potential(zero_fit):
    spectrum = find_eigenvalues(zero_fit, BoundaryCondition.dirichlet_first(), 0.5, 9.5, 0.1)
    assert np.max(np.abs(spectrum.eigenvalues - np.pi * np.arange(1, 4))) <= 1e-10
    assert list(spectrum.index) == [0, 1, 2]
    assert np.all(spectrum.residual <= 1e-12)
    assert np.all((spectrum.brackets[:, 0] <= spectrum.eigenvalues) & (spectrum.eigenvalues <= spectrum.brackets[:, 1]))


def test_eigenvalues_include_negative_indices(zero_fit):
    spectrum = find_eigenvalues(zero_fit, BoundaryCondition.dirichlet_first(), -7.0, 7.0)
    assert np.allclose(spectrum.eigenvalues, np.pi * np.arange(-2, 3), atol=1e-10)
    assert list(spectrum.index) == [-2, -1, 0, 1, 2]
    assert np.all(np.diff(spectrum.eigenvalues) > 0)


def test_empty_range_gives_empty_spectrum(zero_fit):
    spectrum = find_eigenvalues(zero_fit, BoundaryCondition.dirichlet_first(), 1.0, 1.0 + 1e-3)
    assert len(spectrum) == 0
    assert spectrum.to_csv() == "index,lambda,abs_det,bracket_lo,bracket_hi\n"
    with pytest.raises(ValueError):
        find_eigenvalues(zero_fit, BoundaryCondition.dirichlet_first(), 2.0, 1.0)


def test_complex_characteristic_is_rejected():
    pot = PotentialSpec(lambda x: 0.0, lambda x: 1j * np.ones_like(x), 1.0, label="iq")
    ka = fit_kernel(pot, 4, Grid(1.0, 400))
    bc = BoundaryCondition(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 1j]]))
    with pytest.raises(ComplexCharacteristic):
        find_eigenvalues(ka, bc, -10.0, 10.0)


def test_spectrum_csv(zero_fit):
    spectrum = find_eigenvalues(zero_fit, BoundaryCondition.dirichlet_first(), 0.5, 4.0, 0.1)
    lines = spectrum.to_csv().splitlines()
    assert lines[0] == "index,lambda,abs_det,bracket_lo,bracket_hi"
    fields = lines[1].split(",")
    assert fields[0] == "0" and float(fields[1]) == pytest.approx(np.pi, abs=1e-10)
    assert isinstance(spectrum, Spectrum)


def test_index_roots():
    assert list(index_roots(np.array([-3.0, -1.0, 0.0, 2.0]))) == [-2, -1, 0, 1]
    assert list(index_roots(np.array([]))) == []
