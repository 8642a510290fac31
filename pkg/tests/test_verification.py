import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlneumann.extension import GridFunction
from nlneumann.geometry import Domain, build_grid
from nlneumann.kernels import FracParams
from nlneumann.verification import (FormAssembly, admissible_exponent, bilinear_equivalence,
                                    integration_by_parts, max_principle_campaign, neumann_residual,
                                    omega_stiffness, refinement_study, seminorms, surrogate_study)

UNIT = Domain.interval(0.0, 1.0)
G16 = build_grid(UNIT, 1 / 16)


def gf(func, g=G16):
    return GridFunction.from_callable(g, func)


def test_omega_stiffness_annihilates_constants(params):
    S = omega_stiffness(G16, params)
    np.testing.assert_allclose(S @ np.ones(G16.nodes.size), 0.0, atol=1e-12 * np.abs(S).max())
    np.testing.assert_allclose(S, S.T, rtol=1e-13, atol=0)
    assert np.all(np.linalg.eigvalsh(S)[1:] > 0)


@pytest.mark.parametrize("which", ["u", "v"])
def test_identities_vanish_for_constants(which, params):
    c = gf(lambda x: np.full_like(x, 3.0))
    w = gf(lambda x: np.cos(np.pi * x) + x**2)
    u, v = (c, w) if which == "u" else (w, c)
    rep = bilinear_equivalence(u, v, params)
    assert abs(rep.left) <= 1e-10 and abs(rep.right) <= 1e-10


def test_ibp_constant_u(params):
    u = gf(lambda x: np.full_like(x, -1.5))
    rep = integration_by_parts(u, gf(np.sin), params)
    assert abs(rep.left) <= 1e-10 and abs(rep.right) <= 1e-10


def test_ibp_v_one_gives_domain_integral(params):
    # v = 1 makes the left side vanish, so the integral of (-Delta)^s u~ over Omega must too
    fa = FormAssembly(G16, params)
    u = gf(lambda x: np.cos(np.pi * x) + 0.5 * x)
    rep = integration_by_parts(u, gf(np.ones_like), params, fa=fa)
    assert abs(rep.left) <= 1e-10
    x, w = fa.graded_rule
    dom = float(w @ (fa.pointwise_frac @ u.values))
    assert rep.right == pytest.approx(dom, abs=1e-10)
    assert abs(dom) <= 1e-4 * np.abs(fa.pointwise_frac @ u.values).max()


def test_identity_report_fields():
    rep = bilinear_equivalence(gf(np.cos), gf(np.exp), FracParams(0.4))
    row = rep.row()
    assert row["name"] == "bilinear_equivalence" and row["h"] == G16.h
    assert rep.abs_error == pytest.approx(abs(rep.left - rep.right))
    assert rep.rel_error <= 2e-2


def test_refinement_decreases():
    pairs = [(lambda x: np.cos(np.pi * x), lambda x: np.exp(-x)), (lambda x: x**2, np.sin)]
    out = refinement_study(pairs, 0.4, h0=1 / 16, levels=2)
    for reps in out["bilinear_equivalence"]:
        assert reps[0].rel_error <= 2e-2
        assert reps[1].rel_error <= reps[0].rel_error
    for reps in out["integration_by_parts"]:
        assert reps[0].rel_error <= 2e-2


def test_seminorm_examples(params):
    z = seminorms(gf(np.zeros_like), params)
    assert z.gagliardo == 0 and z.regional == 0 and z.l1s == 0
    one = seminorms(gf(np.ones_like), params)
    assert one.gagliardo <= 1e-7 and one.regional <= 1e-7 and one.l1s > 0


@settings(max_examples=15, deadline=None)
@given(c=st.lists(st.floats(-2, 2), min_size=3, max_size=3), s=st.sampled_from([0.3, 0.5, 0.7]))
def test_regional_dominates_omega_part(c, s):
    p = FracParams(s)
    fa = FormAssembly(G16, p)
    u = c[0] * np.cos(np.pi * G16.nodes) + c[1] * G16.nodes**2 + c[2] * np.sin(3 * G16.nodes)
    sn = seminorms(GridFunction(G16, u), p, fa=fa)
    grad2 = np.sum(np.diff(u) ** 2) / G16.h
    lower = grad2 + fa.omega_form(u, u)
    assert sn.regional**2 >= lower - 1e-10 * (1 + lower)


def test_campaign_zero_and_constant_sources():
    zero = lambda rng, d: (np.sin, lambda x: 0.5 + x**2, lambda x: np.zeros_like(x))
    summary = max_principle_campaign(6, 1, zero, h=1 / 32)
    assert summary.passed
    assert all(abs(r.min_u) <= 1e-10 for r in summary.records)

    def fa_(rng, d):
        c = rng.uniform()
        a = lambda x: 0.5 + c * x**2
        return np.cos, a, a

    summary = max_principle_campaign(6, 2, fa_, h=1 / 32)
    assert summary.passed
    assert all(abs(r.min_u - 1) <= 1e-10 and abs(r.min_ext - 1) <= 1e-10 for r in summary.records)


def test_campaign_small_random():
    summary = max_principle_campaign(12, 7, h=1 / 32, s_values=(0.5,))
    assert summary.passed and len(summary.records) == 12
    assert summary.records[3].seed == "7:3"


def test_campaign_deterministic():
    a = max_principle_campaign(4, 11, h=1 / 32)
    b = max_principle_campaign(4, 11, h=1 / 32)
    assert a.records == b.records


def test_neumann_residual_refines():
    f = lambda x: np.cos(np.pi * x)
    r1 = neumann_residual(f, build_grid(UNIT, 1 / 32), FracParams(0.5))
    r2 = neumann_residual(f, build_grid(UNIT, 1 / 64), FracParams(0.5))
    assert r1 / r2 >= 2


def test_admissible_exponent():
    assert admissible_exponent(0.6, 2)
    assert admissible_exponent(0.35, 2 * 0.9)
    assert not admissible_exponent(0.3, 3)
    assert not admissible_exponent(0.7, 1)


def test_surrogate_stable():
    from nlneumann.solver import ProblemData

    rows = surrogate_study(0.5, 2, lambda g, p: ProblemData(g, 0.0, 1.0, lambda x: np.exp(x), p), levels=2)
    assert abs(rows[0].ratio / rows[1].ratio - 1) < 0.2
