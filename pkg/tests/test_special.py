import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from nrlab.errors import DomainError, RangeExceeded
from nrlab.special import (
    erfc,
    erfc_zeros,
    gaussian_cauchy_h,
    log_gamma,
    log_mittag_leffler,
    mittag_leffler,
)
from nrlab.winding import rectangle, winding_number

finite = st.floats(-6, 6, allow_nan=False)


def _cquad(f, a, b, **kw):
    re = integrate.quad(lambda t: f(t).real, a, b, epsabs=0, epsrel=2e-14, limit=400, **kw)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, epsabs=0, epsrel=2e-14, limit=400, **kw)[0]
    return complex(re, im)


def _ml_direct(z, lam, terms=2500):
    # plain big-float summation; nsum extrapolation misjudges these series.
    # The largest term is about exp(|z|^lam), so carry that many extra digits.
    grow = abs(complex(z)) ** lam
    extra = int(grow / math.log(10)) + 20
    # the terms peak near k = lam |z|^lam
    terms = max(terms, int(1.5 * lam * grow) + 200)
    with mp.workdps(mp.mp.dps + extra):
        zm, lm = mp.mpc(z), mp.mpf(lam)
        return +mp.fsum(zm**k / mp.gamma(k / lm + 1) for k in range(terms))


def test_erfc_zero_is_one():
    assert erfc(0) == 1


def test_erfc_against_ray_quadrature():
    z = 1.5 + 0.5j
    ref = 2 / math.sqrt(math.pi) * _cquad(lambda t: cmath.exp(-((z + t) ** 2)), 0, np.inf)
    assert abs(erfc(z) - ref) <= 1e-12 * abs(ref)


def test_erfc_against_bigfloat_grid():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-10, 10, (300, 2)) @ np.array([1, 1j])
    pts = pts[np.abs(pts) <= 10]
    with mp.workdps(40):
        for z in pts:
            ref = complex(mp.erfc(mp.mpc(z)))
            if ref == 0 or not cmath.isfinite(ref):
                continue
            assert abs(erfc(z) - ref) <= 1e-13 * abs(ref), z


@given(finite, finite)
def test_erfc_reflection_sum(x, y):
    z = complex(x, y)
    s = erfc(z) + erfc(-z)
    # large |e^{-z^2}| values make both terms huge; compare relative to their size
    assert abs(s - 2) <= 1e-12 * max(1.0, abs(erfc(z)))


@given(finite, finite)
def test_erfc_schwarz_reflection(x, y):
    z = complex(x, y)
    a, b = erfc(z.conjugate()), erfc(z).conjugate()
    assert abs(a - b) <= 1e-14 * max(1.0, abs(b))


def test_erfc_zeros_first_pair():
    zl = erfc_zeros(1)
    assert len(zl.zeros) == 2
    z = zl.zeros[0]
    assert abs(z - (-1.35 + 1.99j)) < 0.01
    assert zl.zeros[1] == z.conjugate()


def test_erfc_zeros_match_rectangle_scan():
    zl = erfc_zeros(6)
    inside = [z for z in zl.upper if -4 < z.real < 0 and 0 < z.imag < 4]
    count = winding_number(erfc, rectangle(-4, 0, 0, 4), n0=512)
    assert count == len(inside) >= 1
    # the first zero alone sits in a smaller box
    assert winding_number(erfc, rectangle(-1.7, -1.0, 1.6, 2.3)) == 1
    assert -1.7 < zl.upper[0].real < -1.0 and 1.6 < zl.upper[0].imag < 2.3


@pytest.mark.parametrize("count", [1, 4, 10])
def test_erfc_zeros_sector_and_residual(count):
    zl = erfc_zeros(count)
    assert len(zl.zeros) == 2 * count
    for z, r in zip(zl.zeros, zl.residuals):
        assert abs(cmath.phase(z)) < 3 * math.pi / 4
        assert r <= 1e-10
        assert abs(erfc(z)) <= 1e-10
    mods = [abs(z) for z in zl.upper]
    assert mods == sorted(mods)


def test_erfc_zeros_rejects_zero_count():
    with pytest.raises(ValueError):
        erfc_zeros(0)


def test_h_at_i():
    assert abs(gaussian_cauchy_h(1j) - 0.5 * math.e * math.erfc(1)) < 1e-15


def test_h_against_line_quadrature():
    zeta = 2 + 3j
    # |u| > 12 contributes below exp(-144) / dist
    ref = _cquad(lambda u: cmath.exp(-u * u) / (u - zeta), -12, 12) / (2j * math.pi)
    assert abs(gaussian_cauchy_h(zeta) - ref) <= 1e-10


def test_h_lower_half_against_quadrature():
    zeta = -0.7 - 0.4j
    ref = _cquad(lambda u: cmath.exp(-u * u) / (u - zeta), -12, 12) / (2j * math.pi)
    assert abs(gaussian_cauchy_h(zeta) - ref) <= 1e-10


def test_h_rejects_real():
    with pytest.raises(DomainError):
        gaussian_cauchy_h(0.3)


@pytest.mark.parametrize("x", np.linspace(-3, 3, 13))
def test_h_jump_with_extrapolation(x):
    def jump(eps):
        return gaussian_cauchy_h(complex(x, eps)) - gaussian_cauchy_h(complex(x, -eps))

    j3, j4 = jump(1e-3), jump(1e-4)
    target = math.exp(-x * x)
    assert abs(j4 - target) < abs(j3 - target) + 1e-14
    # the jump error is O(eps), so the Richardson combination removes the leading term
    rich = (10 * j4 - j3) / 9
    assert abs(rich - target) < 1e-7


@given(finite, st.floats(0.01, 5))
def test_h_conjugate_symmetry(x, y):
    z = complex(x, y)
    assert abs(gaussian_cauchy_h(z.conjugate()) + gaussian_cauchy_h(z).conjugate()) < 1e-14 * max(1, abs(gaussian_cauchy_h(z)))


def test_ml_lambda_one_is_exp():
    rng = np.random.default_rng(3)
    for _ in range(200):
        r, t = 20 * math.sqrt(rng.uniform()), rng.uniform(-math.pi, math.pi)
        z = cmath.rect(r, t)
        ref = cmath.exp(z)
        assert abs(mittag_leffler(z, 1.0) - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 3.7])
def test_ml_at_zero(lam):
    assert mittag_leffler(0, lam) == 1


def test_ml_lambda_two_against_bigfloat():
    with mp.workdps(40):
        ref = _ml_direct(4, 2.0)
    assert abs(mittag_leffler(4, 2.0) - complex(ref)) <= 1e-12 * abs(complex(ref))


def test_ml_half_order_identity():
    # E_{1/2}(z) = exp(z^2) erfc(-z) ties the series to an independent function
    for z in [0.3, 2.0, -1.5 + 0.5j, 1 + 2j, 4.0]:
        ref = cmath.exp(z * z) * erfc(-z)
        assert abs(mittag_leffler(z, 2.0) - ref) <= 1e-12 * abs(ref)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 4), st.floats(0, 6), st.floats(-math.pi, math.pi))
def test_ml_log_matches_bigfloat(lam, r, t):
    # stay where the worst cancellation, about exp(r^lam), fits the 512-bit rung
    assume(r**lam <= 250)
    z = cmath.rect(r, t)
    with mp.workdps(50):
        ref = _ml_direct(z, lam)
    ref = complex(ref)
    got = cmath.exp(log_mittag_leffler(z, lam))
    assert abs(got - ref) <= 1e-11 * abs(ref)


def test_ml_cancellation_beyond_ladder_raises():
    with pytest.raises(RangeExceeded):
        log_mittag_leffler(cmath.rect(4.9, 1.0), 4.0)


def test_log_gamma_values():
    assert log_gamma(1) == 0
    assert abs(log_gamma(5) - math.log(24)) < 1e-14
    with mp.workdps(40):
        ref = complex(mp.loggamma(mp.mpc(0.5, 2)))
    assert abs(log_gamma(0.5 + 2j) - ref) <= 1e-13 * abs(ref)


@pytest.mark.parametrize("z", [0, -1, -7])
def test_log_gamma_poles(z):
    with pytest.raises(DomainError):
        log_gamma(z)


@given(st.floats(0.5, 50), st.floats(-50, 50))
def test_log_gamma_recurrence(x, y):
    z = complex(x, y)
    d = log_gamma(z + 1) - log_gamma(z) - cmath.log(z)
    # equality holds modulo 2 pi i on the principal branch
    d = complex(d.real, math.remainder(d.imag, 2 * math.pi))
    assert abs(d) < 1e-12 * max(1, abs(log_gamma(z)))
