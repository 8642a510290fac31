import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlneumann.geometry import Domain, build_grid
from nlneumann.kernels import (FracParams, QuadratureRule, boundary_factor, exterior_quadrature,
                               general_tail_integral, normalization_constant, regional_kernel)
from nlneumann.verification import brute_force_regional_kernel


def _mp_constant(N, s):
    s = mpmath.mpf(s)
    return mpmath.pi ** (-mpmath.mpf(N) / 2) * 4**s * s * mpmath.gamma(mpmath.mpf(N) / 2 + s) / mpmath.gamma(1 - s)


def test_constant_examples():
    assert normalization_constant(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)
    assert normalization_constant(2, 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert normalization_constant(1, 1e-9) < 1e-8


@settings(max_examples=80, deadline=None)
@given(s=st.floats(1e-6, 1 - 1e-6), N=st.sampled_from([1, 2]))
def test_constant_matches_mpmath(s, N):
    with mpmath.workdps(30):
        ref = float(_mp_constant(N, s))
    assert normalization_constant(N, s) == pytest.approx(ref, rel=1e-12)
    assert normalization_constant(N, s) > 0


@pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5])
def test_constant_rejects_bad_s(s):
    with pytest.raises(ValueError):
        normalization_constant(1, s)
    with pytest.raises(ValueError):
        FracParams(s)


def test_boundary_factor_examples(unit):
    assert boundary_factor(2.0, unit, FracParams(0.25)) == pytest.approx(2 * (1 - 2**-0.5), rel=1e-13)
    assert boundary_factor(3.0, unit, FracParams(0.5)) == pytest.approx(1 / 6, rel=1e-13)
    assert boundary_factor(-1.0, unit, FracParams(0.5)) == pytest.approx(1 / 2, rel=1e-13)


def test_tail_integral_examples(unit):
    assert general_tail_integral(2.0, 1.0, unit) == pytest.approx(0.5, rel=1e-13)
    x = 1.37
    assert general_tail_integral(x, 0.6, unit) == boundary_factor(x, unit, FracParams(0.3))


def test_tail_integral_rejects(unit):
    with pytest.raises(ValueError):
        general_tail_integral(0.5, 1.0, unit)
    with pytest.raises(ValueError):
        general_tail_integral(1.0, 1.0, unit)
    with pytest.raises(ValueError):
        general_tail_integral(2.0, 0.0, unit)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_boundary_factor_slope(unit, s):
    g = build_grid(unit, 1 / 32)
    deltas = g.shell_deltas[g.shell_deltas <= g.h]
    F = boundary_factor(1.0 + deltas, unit, FracParams(s))
    slope = np.polyfit(np.log(deltas), np.log(F), 1)[0]
    assert abs(slope + 2 * s) <= 0.05


def test_tail_slope_tau_one(unit):
    deltas = 2.0 ** -np.arange(4, 20)
    F = general_tail_integral(1.0 + deltas, 1.0, unit)
    assert np.polyfit(np.log(deltas), np.log(F), 1)[0] == pytest.approx(-1.0, abs=0.02)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0.05, 0.95), d1=st.floats(1e-6, 10.0), d2=st.floats(1e-6, 10.0))
def test_boundary_factor_monotone(s, d1, d2):
    d = Domain.interval(0.0, 1.0)
    lo, hi = sorted((d1, d2))
    p = FracParams(s)
    assert boundary_factor(1 + lo, d, p) >= boundary_factor(1 + hi, d, p)
    assert boundary_factor(-lo, d, p) >= boundary_factor(-hi, d, p)


def test_disk_boundary_factor_refines(disk):
    p = FracParams(0.5, N=2)
    q = QuadratureRule()
    x = np.array([1.3, 0.0])
    coarse = boundary_factor(x, disk, p, q)
    fine = boundary_factor(x, disk, p, q.refined())
    assert coarse > 0
    assert abs(coarse - fine) <= 1e-8 * fine
    # rotational invariance
    assert boundary_factor(np.array([0.0, -1.3]), disk, p, q) == pytest.approx(coarse, rel=1e-12)


def test_disk_boundary_factor_far_field(disk):
    p = FracParams(0.4, N=2)
    r = 200.0
    approx = math.pi / r ** (2 + 0.8)
    assert boundary_factor(np.array([r, 0.0]), disk, p) == pytest.approx(approx, rel=2e-2)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_exterior_quadrature_weights(unit, s):
    ext = exterior_quadrature(unit, s)
    assert np.all(ext.weights > 0)
    fin = ext.finite
    # finite part covers delta in (0, R_trunc] on both sides
    assert ext.weights[fin].sum() == pytest.approx(2 * ext.R_trunc, rel=1e-10)
    # the tail integrates delta^(-1-2s) exactly
    tail = np.sum(ext.weights[~fin] * ext.delta[~fin] ** (-1 - 2 * s))
    assert tail == pytest.approx(2 * ext.R_trunc ** (-2 * s) / (2 * s), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.1, 0.9), x=st.floats(0.01, 0.99), y=st.floats(0.01, 0.99))
def test_regional_kernel_symmetric_and_dominant(s, x, y):
    if abs(x - y) < 1e-3:
        return
    d = Domain.interval(0.0, 1.0)
    p = FracParams(s)
    kxy = regional_kernel(x, y, d, p)
    assert kxy == pytest.approx(regional_kernel(y, x, d, p), rel=1e-10)
    assert kxy >= abs(x - y) ** (-1 - 2 * s)


def test_regional_kernel_oracle(unit):
    p = FracParams(0.3)
    val = regional_kernel(0.3, 0.7, unit, p)
    ref = brute_force_regional_kernel(0.3, 0.7, unit, p)
    assert val == pytest.approx(ref, rel=1e-6)


def test_regional_kernel_rejects(unit):
    p = FracParams(0.5)
    with pytest.raises(ValueError):
        regional_kernel(0.5, 0.5, unit, p)
    with pytest.raises(ValueError):
        regional_kernel(1.5, 0.5, unit, p)
