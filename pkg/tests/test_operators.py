import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlneumann.extension import GridFunction, StaleExtensionError, extend
from nlneumann.geometry import Domain, build_grid
from nlneumann.kernels import FracParams
from nlneumann.operators import (discretization, frac_laplacian_extended, gradient, local_laplacian,
                                 near_field_measures, w2p_surrogate)
from nlneumann.verification import brute_force_frac_laplacian

UNIT = Domain.interval(0.0, 1.0)
G16 = build_grid(UNIT, 1 / 16)


def test_constants_annihilated(grid32, params):
    M = discretization(grid32, params).frac_matrix
    scale = np.abs(M).max()
    assert np.max(np.abs(M @ np.ones(grid32.nodes.size))) <= 1e-13 * scale
    u = extend(GridFunction(grid32, np.full(grid32.nodes.size, 4.0)), p=params)
    assert abs(frac_laplacian_extended(u, grid32.nodes[5], params)) <= 1e-12 * scale


@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.0])
def test_full_row_annihilates_constants(grid32, gamma):
    d = discretization(grid32, FracParams(0.4))
    A = d.laplacian_matrix + gamma * d.frac_matrix + np.diag(np.sin(grid32.nodes)) @ d.gradient_matrix
    assert np.max(np.abs(A @ np.ones(grid32.nodes.size))) <= 1e-13 * np.abs(A).max()


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_matches_brute_force_oracle(s, rng):
    g = build_grid(UNIT, 1 / 32)
    p = FracParams(s)
    v = np.cos(np.pi * g.nodes) + 0.2 * rng.standard_normal(g.nodes.size)
    M = discretization(g, p).frac_matrix
    for i in (1, 2, 9, 16, 30, 31):
        assert abs(M[i] @ v - brute_force_frac_laplacian(v, g, p, i)) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(u=arrays(float, G16.nodes.shape[0], elements=st.floats(-5, 5)),
       v=arrays(float, G16.nodes.shape[0], elements=st.floats(-5, 5)),
       a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_linear(u, v, a, b):
    p = FracParams(0.5)
    x = G16.nodes[7]
    ev = lambda w: frac_laplacian_extended(extend(GridFunction(G16, w), p=p), x, p)
    lhs = ev(a * u + b * v)
    rhs = a * ev(u) + b * ev(v)
    scale = np.abs(discretization(G16, p).frac_matrix).max() * (1 + np.abs(u).max() + np.abs(v).max()) * 4
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_requires_extension(grid32):
    p = FracParams(0.5)
    u = GridFunction.from_callable(grid32, np.sin)
    with pytest.raises(StaleExtensionError):
        frac_laplacian_extended(u, grid32.nodes[3], p)
    with pytest.raises(ValueError):
        frac_laplacian_extended(extend(u, p=p), 0.0, p)


@settings(max_examples=30, deadline=None)
@given(coef=arrays(float, 4, elements=st.floats(-1, 1)), k=st.integers(2, 30))
def test_minimum_sign(coef, k):
    p = FracParams(0.6)
    x = G16.nodes
    v = coef[0] * np.cos(np.pi * x) + coef[1] * np.cos(2 * np.pi * x) + coef[2] * x
    v = v - v.min() + 1.0
    v[k % (x.size - 2) + 1] = 0.0  # strict interior minimum
    u = extend(GridFunction(G16, v), p=p)
    assert frac_laplacian_extended(u, x[k % (x.size - 2) + 1], p) < 0


def test_local_laplacian_quadratic(grid32):
    u = GridFunction.from_callable(grid32, lambda y: y**2)
    for x in grid32.interior[::4]:
        assert local_laplacian(u, x) == pytest.approx(-2.0, abs=1e-9)
    c = GridFunction(grid32, np.full(grid32.nodes.size, 3.0))
    assert local_laplacian(c, grid32.interior[3]) == 0.0


def test_local_laplacian_refinement():
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        g = build_grid(UNIT, h)
        u = GridFunction.from_callable(g, lambda y: np.sin(np.pi * y))
        errs.append(abs(local_laplacian(u, 0.5) - np.pi**2))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.02)


def test_gradient_examples(grid32):
    assert gradient(GridFunction.from_callable(grid32, lambda y: y), 0.5) == pytest.approx(1.0, abs=1e-13)
    assert gradient(GridFunction(grid32, np.full(grid32.nodes.size, 2.0)), 0.5) == 0.0
    errs = []
    for h in (1 / 16, 1 / 32):
        g = build_grid(UNIT, h)
        errs.append(abs(gradient(GridFunction.from_callable(g, lambda y: y**3), 0.5) - 0.75))
    assert errs[0] == pytest.approx(1 / 16**2, rel=1e-8)
    assert errs[0] / errs[1] == pytest.approx(4, rel=1e-6)


def test_near_field_measures():
    m = near_field_measures(0.5, UNIT, 1.0)
    assert m.sum() == pytest.approx(2.0)
    np.testing.assert_allclose(m, [1.0, 0.0, 0.0, 1.0])
    m = near_field_measures(0.2, UNIT, 1.0)
    np.testing.assert_allclose(m, [0.4, 0.6, 0.6, 0.4])


def test_w2p_surrogate_scales(grid32):
    u = GridFunction.from_callable(grid32, np.cos)
    assert w2p_surrogate(u.with_values(3 * u.values)) == pytest.approx(3 * w2p_surrogate(u))
