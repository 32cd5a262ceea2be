import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrlab.errors import DomainError
from nrlab.models import builtin_model
from nrlab.rh import (
    LEMMAS,
    DecayFit,
    F_n,
    F_n_closed,
    G_n,
    P_n,
    P_n_closed,
    contour_for,
    fit_decay,
    fn_gn_agreement,
    integral_F_on_gamma1,
    integral_gamma2,
    jump_checks_F,
    jump_checks_G,
    jump_checks_P,
    lemma_decay_suite,
    m_decomposition,
    theorem1_pipeline,
    window_limit,
)
from nrlab.saddle import build_chart, phi
from nrlab.sections import ScalingWindow, ratio_on_window

EXP = builtin_model("exp")
ML2 = builtin_model("mittag_leffler(2)")


def test_fit_decay_recovers_power():
    n = [16, 32, 64, 128]
    fit = fit_decay(n, [3 * k**-0.5 for k in n])
    assert fit.fitted_slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.fit_residual < 1e-12
    lin = fit_decay(n, [math.exp(-0.1 * k) for k in n], "exponential")
    assert lin.fitted_slope == pytest.approx(-0.1, abs=1e-12)
    assert lin.relative_residual < 1e-10


def test_decay_fit_validation():
    with pytest.raises(ValueError):
        DecayFit((4, 4), (1.0, 1.0), 0.0, 0.0)
    with pytest.raises(ValueError):
        fit_decay([1, 2], [1.0, 0.0])


# --- F_n against its closed form ------------------------------------------------------------


@pytest.mark.parametrize("model", [EXP, ML2], ids=["exp", "ml2"])
@pytest.mark.parametrize("n", [4, 20])
def test_fn_closed_form(model, n):
    c = contour_for(model)
    for z in [0.3, 0.5 + 0.2j, 0.9 - 0.1j, 1.4 + 0.3j, -1.5, 0.8 + 0.9j]:
        inside = c.contains(z)
        quad = F_n(model, c, n, z).value
        closed = F_n_closed(model, n, z, inside)
        assert abs(quad - closed) <= 1e-6 * abs(closed)


def test_fn_rejects_origin():
    with pytest.raises(DomainError):
        F_n(EXP, contour_for(EXP), 8, 0)


# --- jumps ---------------------------------------------------------------------------------


def test_jump_F():
    checks = jump_checks_F(EXP, contour_for(EXP), 20, count=3)
    assert all(c.ok for c in checks), [(c.residual, c.tolerance) for c in checks]


def test_jump_G():
    checks = jump_checks_G(contour_for(EXP), 1.0, 20, count=3)
    assert all(c.ok for c in checks), [(c.residual, c.tolerance) for c in checks]


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_jump_P(lam):
    checks = jump_checks_P(lam, 40, count=5)
    assert all(c.ok for c in checks)


# --- P_n ---------------------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.25), st.floats(-math.pi, math.pi), st.sampled_from([1.0, 2.0]), st.integers(4, 400))
def test_p_dual_form(r, t, lam, n):
    z = 1 + cmath.rect(r, t)
    chart = build_chart(lam)
    if abs(chart.psi_inverse(z).real) < 1e-9:
        return
    a = P_n(chart, n, z)
    b = P_n_closed(lam, n, z)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


def test_p_side_required_on_path():
    chart = build_chart(1.0)
    with pytest.raises(DomainError):
        P_n_closed(1.0, 16, 1.0)
    z = complex(chart.psi_forward(0.1j))
    jump = P_n_closed(1.0, 16, z, "left") - P_n_closed(1.0, 16, z, "right")
    assert abs(jump - cmath.exp(16 * phi(z, 1.0))) < 1e-12


def test_window_limit_at_zero():
    assert window_limit(0, 1.0) == pytest.approx(0.5)


# --- boundary integrals ------------------------------------------------------------------------


def test_m_decomposition_closes():
    d = m_decomposition(EXP, n=32, z=1.02)
    assert d.discrepancy <= max(1e-8, 10 * d.error_estimate)
    assert set(d.terms) == {"P_on_Gamma1", "G_on_Gamma1", "F_on_Gamma1", "Gamma2"}


def test_m_decomposition_rejects_far_probe():
    with pytest.raises(DomainError):
        m_decomposition(EXP, n=16, z=1.5)


def test_gamma2_tail_exponential():
    fit = lemma_decay_suite("Gamma2_tail", EXP, None, [16, 32, 64, 128, 256])
    assert fit.kind == "exponential"
    assert fit.fitted_slope < 0
    assert fit.relative_residual < 0.1


@pytest.mark.parametrize("n,z", [(16, 0.95), (64, 1.02 + 0.01j)])
def test_f_on_gamma1_equals_gamma2_tail(n, z):
    # Cauchy: for z inside the circle, integrating F_n over it picks up exactly the density off the disk
    c = contour_for(EXP)
    a = integral_F_on_gamma1(EXP, c, n, z, rtol=0, atol=1e-13).value
    b = integral_gamma2(EXP, c, n, z, tol=1e-13, rtol=0).value
    assert abs(a - b) <= 1e-11 * max(1.0, abs(b))


def test_lemma_suite_names():
    assert LEMMAS == ("G_on_Gamma1", "Gamma2_tail", "F_on_Gamma1", "P_on_Gamma1")
    with pytest.raises(ValueError):
        lemma_decay_suite("nope", EXP, None, [16, 32])
    with pytest.raises(DomainError):
        lemma_decay_suite("P_on_Gamma1", EXP, None, [16, 32], z_probe=1.5)


def test_p_on_gamma1_large_n_rate():
    # past the pre-asymptotic range the Gamma_1 integral of P_n decays like n^-1/2
    fit = lemma_decay_suite("P_on_Gamma1", EXP, None, [1024, 2048, 4096, 8192])
    assert -0.6 <= fit.fitted_slope <= -0.4


# --- F_n ~ G_n and the full window pipeline ------------------------------------------------------


def test_fn_gn_agreement_ml2():
    fit = fn_gn_agreement(ML2, n_grid=(32, 64, 128, 256))
    m = fit.magnitudes
    assert m[-1] < m[0]
    assert sum(b > a for a, b in zip(m, m[1:])) <= 1


def test_pipeline_matches_direct_ratio():
    ws = [-1.0, -0.5 + 0.5j]
    rows = theorem1_pipeline(EXP, 64, ws)
    direct = ratio_on_window(EXP, ScalingWindow.for_model(EXP, 64, ws))
    for r, d in zip(rows, direct):
        assert abs(r.ratio - d.ratio) <= 1e-10
        assert r.target == d.target


def test_pipeline_error_shrinks():
    a = theorem1_pipeline(EXP, 64, [-1.0])[0].F_error
    b = theorem1_pipeline(EXP, 256, [-1.0])[0].F_error
    assert b < a


def test_pipeline_rejects_right_half():
    with pytest.raises(DomainError):
        theorem1_pipeline(EXP, 16, [0.5])


def test_g_is_entire_off_contour():
    c = contour_for(EXP)
    # G_n is analytic off gamma_theta: a small circle integral of it vanishes
    pts = 0.6 + 0.05 * np.exp(2j * np.pi * np.arange(32) / 32)
    vals = np.array([G_n(c, 1.0, 16, z).value for z in pts])
    assert abs(np.mean(vals * (pts - 0.6))) < 1e-10
