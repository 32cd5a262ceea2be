"""Complex special functions: erfc and its zeros, the Gaussian Cauchy transform, Mittag-Leffler."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import special as sps

from .errors import CertificationError, ConvergenceError, DomainError, RangeExceeded
from .series import logsumexp_complex, mp_logsumexp, rounding_bound
from .winding import circle, winding_number

SQRT_PI = math.sqrt(math.pi)
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
PREC_LADDER = (53, 106, 256, 512)

# Below these thresholds (after reflection to Re z >= 0) the Maclaurin series is used;
# beyond them the Laplace continued fraction converges in at most a few hundred steps.
_CF_MIN_RE = 1.0
_CF_MIN_ABS = 8.0


def _erf_series(z):
    z2 = z * z
    term = z
    re_parts = [z.real]
    im_parts = [z.imag]
    k = 0
    while True:
        k += 1
        term *= -z2 / k
        add = term / (2 * k + 1)
        re_parts.append(add.real)
        im_parts.append(add.imag)
        if k > abs(z2) and abs(add) < 1e-18 * (abs(term) + 1.0):
            break
        if k > 2000:
            raise ConvergenceError(f"erf series did not converge at z={z}")
    return TWO_OVER_SQRT_PI * complex(math.fsum(re_parts), math.fsum(im_parts))


def _erfcx_cf(z, tol=1e-16, maxit=20000):
    """exp(z^2) erfc(z) for Re z >= 0 via the Laplace continued fraction (modified Lentz)."""
    tiny = 1e-300
    f = z if z != 0 else tiny
    c = f
    d = 0.0
    for k in range(1, maxit):
        a = 0.5 * k
        d = z + a * d
        d = 1.0 / (d if d != 0 else tiny)
        c = z + a / c
        if c == 0:
            c = tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return 1.0 / (SQRT_PI * f)
    raise ConvergenceError(f"erfc continued fraction did not converge at z={z}")


def _use_cf(z):
    return z.real >= _CF_MIN_RE or abs(z) >= _CF_MIN_ABS


def erfc(z) -> complex:
    """Complementary error function of a complex argument."""
    z = complex(z)
    if z.real < 0:
        return 2.0 - erfc(-z)
    if _use_cf(z):
        return cmath.exp(-z * z) * _erfcx_cf(z)
    return 1.0 - _erf_series(z)


def erfcx(z) -> complex:
    """Scaled complement exp(z^2) erfc(z); bounded for Re z >= 0."""
    z = complex(z)
    if z.real < 0:
        return 2.0 * cmath.exp(z * z) - erfcx(-z)
    if _use_cf(z):
        return _erfcx_cf(z)
    return cmath.exp(z * z) * (1.0 - _erf_series(z))


def log_erfc(z) -> complex:
    """log erfc(z) without overflow or underflow (imaginary part defined mod 2 pi)."""
    z = complex(z)
    if z.real >= 0:
        return cmath.log(erfcx(z)) - z * z
    lw = cmath.log(erfcx(-z)) - z * z  # log erfc(-z)
    if lw.real < 0.0:
        return cmath.log(2.0 - cmath.exp(lw))
    # 2 - E = -E (1 - 2/E)
    return lw + 1j * math.pi + cmath.log(1.0 - 2.0 * cmath.exp(-lw))


def erfc_derivative(z) -> complex:
    return -TWO_OVER_SQRT_PI * cmath.exp(-complex(z) ** 2)


@dataclass(frozen=True)
class ErfcZeroList:
    zeros: tuple
    residuals: tuple
    radii: tuple

    @property
    def upper(self):
        return self.zeros[0::2]


def _zero_guess(k):
    # erfc(-u) = 0  <=>  erfc(u) = 2 ; for large |u|, u^2 = -log(2 sqrt(pi) u) - 2 pi i k
    u = cmath.sqrt(-2j * math.pi * k)
    for _ in range(30):
        u = cmath.sqrt(-cmath.log(2 * SQRT_PI * u) - 2j * math.pi * k)
        if u.real < 0:
            u = -u
    return -u


def _newton_erfc(z, maxit=60):
    for _ in range(maxit):
        step = erfc(z) / erfc_derivative(z)
        z -= step
        if abs(step) <= 4e-16 * abs(z):
            return z
    raise ConvergenceError(f"Newton for an erfc zero did not converge (last iterate {z})")


def erfc_zeros(count: int) -> ErfcZeroList:
    """The ``count`` smallest-modulus conjugate pairs of erfc zeros, upper representative first.

    Each zero is refined by Newton from the asymptotic string along arg z ~ 3pi/4 and certified
    by a winding number of exactly 1 on a small circle; completeness is certified by the winding
    number on a circle separating the requested zeros from the next one.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    upper = []
    for k in range(1, count + 2):
        z = _newton_erfc(_zero_guess(k))
        if z.imag < 0:
            z = z.conjugate()
        upper.append(z)
    for a, b in zip(upper, upper[1:]):
        if abs(b) <= abs(a) or abs(a - b) < 1e-6:
            raise CertificationError("erfc zero iteration produced out-of-order or repeated zeros")

    zeros, residuals, radii = [], [], []
    for i, z in enumerate(upper[:count]):
        others = [w for j, w in enumerate(upper) if j != i] + [w.conjugate() for w in upper]
        rad = min(0.5, 0.3 * min(abs(z - w) for w in others))
        arg = lambda s: log_erfc(s).imag
        if winding_number(path=circle(z, rad), arg=arg) != 1:
            raise CertificationError(f"argument principle does not certify the erfc zero {z}")
        res = abs(erfc(z))
        if res > 1e-10:
            raise CertificationError(f"residual {res:.3g} too large at erfc zero {z}")
        zeros += [z, z.conjugate()]
        residuals += [res, abs(erfc(z.conjugate()))]
        radii += [rad, rad]

    sep = 0.5 * (abs(upper[count - 1]) + abs(upper[count]))
    total = winding_number(path=circle(0.0, sep), arg=lambda s: log_erfc(s).imag, n0=256)
    if total != 2 * count:
        raise CertificationError(f"expected {2 * count} zeros inside |z| < {sep:.4g}, argument principle gives {total}")
    return ErfcZeroList(tuple(zeros), tuple(residuals), tuple(radii))


def gaussian_cauchy_h(zeta) -> complex:
    """(1/2 pi i) * integral over the real line of exp(-u^2) du / (u - zeta), for zeta off the axis."""
    zeta = complex(zeta)
    if zeta.imag > 0:
        return 0.5 * erfcx(-1j * zeta)
    if zeta.imag < 0:
        return -0.5 * erfcx(1j * zeta)
    raise DomainError("h has a jump across the real axis; zeta must be non-real")


def log_gamma(z) -> complex:
    """Principal branch of log Gamma (the analytic continuation used by scipy and mpmath)."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise DomainError(f"log_gamma has a pole at {z.real}")
    return complex(sps.loggamma(z))


# --- Mittag-Leffler ---------------------------------------------------------------------


def _ml_tail_ratio(absz, lam, k):
    # |t_{k+1} / t_k|, decreasing in k because log Gamma is convex
    return absz * math.exp(math.lgamma(k / lam + 1) - math.lgamma((k + 1) / lam + 1))


def _ml_log_tail(absz, lam, k):
    """log of a certified bound on sum_{j>=k} |t_j|, or +inf when the ratio test has not kicked in."""
    q = _ml_tail_ratio(absz, lam, k)
    if q >= 0.9:
        return math.inf
    return k * math.log(absz) - math.lgamma(k / lam + 1) - math.log1p(-q)


def _ml_initial_cutoff(absz, lam):
    return max(16, int(lam * absz**lam * 1.3) + 16)


def log_mittag_leffler(z, lam: float, rtol: float = 1e-12, max_prec: int = 512) -> complex:
    """log E_{1/lam}(z) by the power series with a term-ratio tail bound.

    The tail past the cutoff is bounded geometrically (term ratios decrease by log-convexity
    of Gamma) and must sit below ``rtol`` times the computed sum. Escalates through the
    precision ladder when cancellation defeats double precision.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    z = complex(z)
    if z == 0:
        return 0j
    absz = abs(z)
    lz = cmath.log(z)
    kmax = _ml_initial_cutoff(absz, lam)
    while True:
        k = np.arange(kmax)
        logs = k * lz - sps.gammaln(k / lam + 1)
        log_s, cond = logsumexp_complex(logs)
        if _ml_log_tail(absz, lam, kmax) - log_s.real <= math.log(rtol) - 3:
            break
        kmax = int(kmax * 1.3) + 16
        if kmax > 10**7:
            raise RangeExceeded("Mittag-Leffler series cutoff exceeds 1e7 terms")
    if rounding_bound(logs, cond) <= rtol:
        return log_s
    for prec in PREC_LADDER[1:]:
        if prec > max_prec:
            break
        with mp.workprec(prec + 20):
            lzm = mp.log(mp.mpc(z))
            lam_mp = mp.mpf(lam)
            while True:
                mlogs = [kk * lzm - mp.loggamma(kk / lam_mp + 1) for kk in range(kmax)]
                s, c = mp_logsumexp(mlogs)
                # the double-precision cutoff was judged against a sum spoiled by cancellation
                if _ml_log_tail(absz, lam, kmax) - float(s.real) <= math.log(rtol) - 3:
                    break
                kmax = int(kmax * 1.3) + 16
            scale = 1 + max(abs(t) for t in mlogs)
            if float(c * scale) * 2.0 ** (-prec) <= rtol:
                return complex(s)
    raise RangeExceeded(f"Mittag-Leffler cancellation at z={z} exceeds the {max_prec}-bit rung")


def mittag_leffler(z, lam: float, rtol: float = 1e-12, max_prec: int = 512) -> complex:
    """E_{1/lam}(z) = sum z^k / Gamma(k/lam + 1)."""
    ls = log_mittag_leffler(z, lam, rtol, max_prec)
    if ls.real > 709.0:
        raise RangeExceeded(f"|E_(1/{lam})({z})| overflows double precision; use log_mittag_leffler")
    return cmath.exp(ls)
