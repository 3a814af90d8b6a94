from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transmute.errors import DomainViolation
from transmute.grid import Grid, cumint, interp, interp_deriv, nodal_derivative


def test_grid_nodes():
    g = Grid(2.0, 10)
    x = g.x
    assert x[0] == 0.0 and x[-1] == 2.0
    assert np.all(np.diff(x) > 0)
    assert len(g) == 11


@pytest.mark.parametrize("b, M", [(0.0, 10), (-1.0, 10), (1.0, 3)])
def test_grid_rejects_bad_arguments(b, M):
    with pytest.raises(ValueError):
        Grid(b, M)


def test_cumint_constant_is_exact():
    g = Grid(1.0, 100)
    assert np.max(np.abs(cumint(g, np.ones(101)) - g.x)) <= 1e-15


@pytest.mark.parametrize("M", [100, 101])
def test_cumint_cubic_is_exact(M):
    g = Grid(1.0, M)
    x = g.x
    assert np.max(np.abs(cumint(g, x) - x**2 / 2)) <= 1e-14
    assert np.max(np.abs(cumint(g, x**3) - x**4 / 4)) <= 1e-14


def test_cumint_cosine():
    g = Grid(1.0, 1000)
    assert np.max(np.abs(cumint(g, np.cos(g.x)) - np.sin(g.x))) <= 1e-12


@pytest.mark.parametrize("M", [40, 41])
def test_cumint_fourth_order(M):
    errs = []
    for m in (M, 2 * M):
        g = Grid(2.0, m)
        errs.append(np.max(np.abs(cumint(g, np.exp(3 * g.x)) - (np.exp(3 * g.x) - 1) / 3)))
    assert errs[0] / errs[1] >= 12.0


def test_cumint_starts_at_zero_and_checks_length():
    g = Grid(1.0, 10)
    assert cumint(g, np.exp(g.x))[0] == 0.0
    with pytest.raises(ValueError):
        cumint(g, np.ones(5))


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(10, 60))
def test_cumint_linear(a, b, M):
    g = Grid(1.5, M)
    f, h = np.sin(3 * g.x), g.x**2 - 1
    lhs = cumint(g, a * f + b * h)
    rhs = a * cumint(g, f) + b * cumint(g, h)
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * max(1.0, np.max(np.abs(rhs)))


@pytest.mark.parametrize("M", [10, 11, 2000, 2001])
def test_weights_reproduce_cumint(M):
    g = Grid(1.3, M)
    f = np.exp(np.sin(4 * g.x))
    assert abs(g.weights() @ f - cumint(g, f)[-1]) <= 1e-14


def test_interp_examples():
    g = Grid(1.0, 20)
    x = g.x
    assert interp(g, x**2, x[7]) == pytest.approx(x[7] ** 2, abs=0)
    mid = 0.5 * (x[3] + x[4])
    assert interp(g, x, mid) == pytest.approx(mid, abs=1e-15)
    g = Grid(1.0, 1000)
    assert abs(interp(g, np.exp(g.x), 0.5005) - np.exp(0.5005)) <= 1e-10


def test_interp_trailing_shape_and_domain():
    g = Grid(1.0, 50)
    vals = np.stack([g.x, 2 * g.x], axis=-1)
    out = interp(g, vals, np.array([0.1, 0.2, 0.3]))
    assert out.shape == (3, 2)
    assert np.allclose(out[:, 1], 2 * np.array([0.1, 0.2, 0.3]))
    with pytest.raises(DomainViolation):
        interp(g, g.x, 1.1)


def test_derivatives():
    g = Grid(1.0, 400)
    f = np.sin(2 * g.x)
    assert np.max(np.abs(nodal_derivative(g, f) - 2 * np.cos(2 * g.x))) <= 1e-8
    xs = np.linspace(0, 1, 37)
    assert np.max(np.abs(interp_deriv(g, f, xs) - 2 * np.cos(2 * xs))) <= 1e-7
