import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlneumann.extension import (GridFunction, StaleExtensionError, extend, extension_matrix,
                                 exterior_gradient_rate, neumann_derivative)
from nlneumann.geometry import Domain, build_grid
from nlneumann.kernels import FracParams

GRID = build_grid(Domain.interval(0.0, 1.0), 1 / 16)
values = arrays(float, GRID.nodes.shape[0], elements=st.floats(-10, 10))


def test_constant_extends_to_constant(grid32, params):
    u = extend(GridFunction(grid32, np.full(grid32.nodes.size, 5.0)), p=params)
    np.testing.assert_allclose(u.exterior_values(params), 5.0, rtol=1e-13)


def test_linear_closed_form(grid32):
    p = FracParams(0.25)
    u = GridFunction.from_callable(grid32, lambda y: y)
    E, F = extension_matrix([2.0], grid32, p)
    assert float(E[0] @ u.values) == pytest.approx(2 - math.sqrt(2), rel=1e-13)
    assert F[0] == pytest.approx(2 * (1 - 2**-0.5), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(v=values, s=st.sampled_from([0.2, 0.5, 0.8]))
def test_convex_combination_bound(v, s):
    p = FracParams(s)
    u1 = extend(GridFunction(GRID, v), p=p).exterior_values(p)
    span = 1e-12 * (1 + np.max(np.abs(v)))
    assert np.all(u1 >= v.min() - span) and np.all(u1 <= v.max() + span)


@settings(max_examples=40, deadline=None)
@given(u=values, v=values, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_extension_linear(u, v, a, b):
    p = FracParams(0.4)
    eu = extend(GridFunction(GRID, u), p=p).exterior
    ev = extend(GridFunction(GRID, v), p=p).exterior
    ew = extend(GridFunction(GRID, a * u + b * v), p=p).exterior
    scale = 1 + np.max(np.abs(a * eu)) + np.max(np.abs(b * ev))
    np.testing.assert_allclose(ew, a * eu + b * ev, atol=1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(u=values, bump=arrays(float, GRID.nodes.shape[0], elements=st.floats(0, 5)))
def test_extension_order_preserving(u, bump):
    p = FracParams(0.6)
    lo = extend(GridFunction(GRID, u), p=p).exterior
    hi = extend(GridFunction(GRID, u + bump), p=p).exterior
    assert np.all(hi >= lo - 1e-12 * (1 + np.max(np.abs(u))))


def test_neumann_vanishes_after_extend(grid32, params, rng):
    u = extend(GridFunction(grid32, rng.standard_normal(grid32.nodes.size)), p=params)
    for x in grid32.exterior[::7]:
        ux = u.exterior[grid32.exterior == x][0]
        F = params.C_Ns * extension_matrix([x], grid32, params)[1][0]
        assert abs(neumann_derivative(u, x, params)) <= 1e-12 * F * (1 + abs(ux))


def test_neumann_constant_exact(grid32, params):
    u = extend(GridFunction(grid32, np.full(grid32.nodes.size, -2.5)), p=params)
    for x in (-0.3, 1.001, 4.0):
        assert neumann_derivative(u, x, params) == pytest.approx(0.0, abs=1e-12)


def test_neumann_positive_when_exterior_raised(grid32, params, rng):
    v = rng.standard_normal(grid32.nodes.size)
    u = GridFunction(grid32, v).with_exterior(np.full(grid32.exterior.size, v.max() + 1), params)
    for x in grid32.exterior[::5]:
        assert neumann_derivative(u, x, params) > 0


def test_neumann_residual_refines(unit):
    p = FracParams(0.5)
    f = lambda y: np.cos(np.pi * y) + 0.3 * np.cos(2 * np.pi * y)
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        g = build_grid(unit, h)
        u = extend(GridFunction.from_callable(g, f), p=p)
        errs.append(abs(neumann_derivative(u, 1.2, p, interior=f)))
    assert errs[0] / errs[1] >= 2 and errs[1] / errs[2] >= 2


def test_stale_cache_rejected(grid32):
    p = FracParams(0.3)
    u = extend(GridFunction.from_callable(grid32, np.sin), p=p)
    with pytest.raises(StaleExtensionError):
        u.exterior_values(FracParams(0.7))
    with pytest.raises(StaleExtensionError):
        u.with_values(u.values).exterior_values(p)
    with pytest.raises(ValueError):
        neumann_derivative(u, 0.5, p)


def test_grid_function_validation(grid32):
    with pytest.raises(ValueError):
        GridFunction(grid32, np.zeros(3))
    bad = np.zeros(grid32.nodes.size)
    bad[2] = np.nan
    with pytest.raises(ValueError):
        GridFunction(grid32, bad)


def test_gradient_rate_linear_quarter(unit):
    p = FracParams(0.25)
    g = build_grid(unit, 1 / 32)
    fit = exterior_gradient_rate(GridFunction.from_callable(g, lambda y: y), p=p)
    assert fit.slope >= -0.6
    assert np.all(fit.gradients <= fit.bound_constant * fit.deltas ** (2 * p.s - 1) * (1 + 1e-12))


def test_gradient_rate_bounded_regime(unit):
    p = FracParams(0.75)
    # the delta^(2s-1) correction is still visible on coarse shells
    g = build_grid(unit, 1 / 200)
    fit = exterior_gradient_rate(GridFunction.from_callable(g, lambda y: np.exp(y) * np.sin(3 * y)), p=p)
    assert fit.slope >= -0.1


def test_gradient_rate_flat(grid32):
    fit = exterior_gradient_rate(GridFunction(grid32, np.full(grid32.nodes.size, 3.0)), p=FracParams(0.5))
    assert fit.flat and math.isnan(fit.slope)
