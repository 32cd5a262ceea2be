"""All roots of a dense polynomial by Aberth-Ehrlich iteration on a precision ladder.

Rung 53 is a vectorized numpy Jacobi sweep. Higher rungs (106, 256, 512 bits) run
Gauss-Seidel sweeps in gmpy2 warm-started from the previous rung. Each root is certified by
a Weierstrass inclusion disk built from a Horner running-error bound; disks must be
disjoint and small before the result is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import mpmath as mp
import numpy as np
import logging

from .errors import ConvergenceError, PrecisionExhausted

LADDER = (53, 106, 256, 512)
_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RootResult:
    roots: np.ndarray
    residuals: np.ndarray  # |p(z)| / sum |c_k| |z|^k
    radii: np.ndarray  # certified inclusion radii
    precision_bits: int
    sweeps: int


def newton_polygon_start(logabs, offset=0.4):
    """Initial points on circles read off the upper convex hull of (k, log|c_k|)."""
    logabs = np.asarray(logabs, dtype=float)
    n = logabs.size - 1
    ks = [k for k in range(n + 1) if np.isfinite(logabs[k])]
    hull = []
    for k in ks:
        while len(hull) >= 2:
            k1, k2 = hull[-2], hull[-1]
            # drop k2 if it lies on or below the chord k1 -> k
            if (logabs[k2] - logabs[k1]) * (k - k1) <= (logabs[k] - logabs[k1]) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append(k)
    pts = []
    for e, (a, b) in enumerate(zip(hull, hull[1:])):
        m = b - a
        r = math.exp((logabs[a] - logabs[b]) / m)
        ang = 2 * math.pi * np.arange(m) / m + 2 * math.pi * e / max(n, 1) + offset
        pts.append(r * np.exp(1j * ang))
    return np.concatenate(pts)


# --- double rung --------------------------------------------------------------------------


def _eval_double(c, z):
    """p/p', |p|, abs-sum and the abs-sum of the derivative, switching to the reversed
    polynomial where |z| > 1; all magnitudes are returned as logs."""
    n = c.size - 1
    big = np.abs(z) > 1
    y = np.where(big, 1 / np.where(big, z, 1), z)
    cc = np.where(big[:, None], c[::-1][None, :], c[None, :])
    p = np.zeros(z.size, dtype=complex)
    dp = np.zeros(z.size, dtype=complex)
    a = np.zeros(z.size)
    ay = np.abs(y)
    for k in range(n, -1, -1):
        dp = dp * y + p
        p = p * y + cc[:, k]
        a = a * ay + np.abs(cc[:, k])
    # for the reversed polynomial q(y) = y^n p(1/y): p'/p = n y - y^2 q'/q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_fwd = p / dp
        inv = n * y - y * y * dp / p
        ratio_rev = 1 / inv
    ratio = np.where(big, ratio_rev, ratio_fwd)
    logscale = np.where(big, n * np.log(np.abs(z)), 0.0)
    with np.errstate(divide="ignore"):
        return ratio, np.log(np.abs(p)) + logscale, np.log(a) + logscale


def _aberth_double(c, z, max_sweeps):
    n = z.size
    u = np.finfo(float).eps
    active = np.ones(n, dtype=bool)
    for sweep in range(1, max_sweeps + 1):
        ratio, logp, loga = _eval_double(c, z)
        noise = logp <= loga + math.log(4 * (2 * n + 1) * u)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1 / diff
        np.fill_diagonal(inv, 0.0)
        S = inv.sum(axis=1)
        w = ratio / (1 - ratio * S)
        w = np.where(np.isfinite(w), w, 0.0)
        small = np.abs(w) <= 4 * u * np.abs(z)
        step = active & ~noise
        z = np.where(step, z - w, z)
        active = active & ~(small | noise)
        if not active.any():
            return z, sweep
    return z, max_sweeps


# --- gmpy2 rungs -----------------------------------------------------------------------


def _to_gmpy(x):
    """Exact conversion of an mpmath mpc into a gmpy2 mpc."""
    def real(v):
        sign, man, exp, _ = v._mpf_
        r = gmpy2.mul_2exp(gmpy2.mpfr(gmpy2.mpz(man)), exp)
        return -r if sign else r
    # no mp.mpc() re-wrap here: that would round to the ambient mpmath precision
    if isinstance(x, mp.mpf):
        return gmpy2.mpc(real(x), gmpy2.mpfr(0))
    return gmpy2.mpc(real(x.real), real(x.imag))


def _horner_g(c, z):
    """p(z)/p'(z), |p|, abs-sum, evaluated forward or reversed by |z|; logs of magnitudes."""
    n = len(c) - 1
    if abs(z) <= 1:
        y, order = z, range(n, -1, -1)
    else:
        y, order = 1 / z, range(0, n + 1)
    p = gmpy2.mpc(0)
    dp = gmpy2.mpc(0)
    a = gmpy2.mpfr(0)
    ay = abs(y)
    for k in order:
        dp = dp * y + p
        p = p * y + c[k]
        a = a * ay + abs(c[k])
    if abs(z) <= 1:
        ratio = p / dp if dp != 0 else gmpy2.mpc(0)
        scale = 0
    else:
        inv = n * y - y * y * dp / p if p != 0 else gmpy2.mpc(0)
        ratio = 1 / inv if inv != 0 else gmpy2.mpc(0)
        scale = n * gmpy2.log(abs(z))
    lp = gmpy2.log(abs(p)) + scale if p != 0 else gmpy2.mpfr("-inf")
    return ratio, lp, gmpy2.log(a) + scale


def _aberth_gmpy(c, z, prec, max_sweeps):
    n = len(z)
    tiny = gmpy2.mpfr(2) ** (-prec + 6)
    noise_log = math.log(4 * (2 * n + 1)) - prec * math.log(2)
    active = [True] * n
    for sweep in range(1, max_sweeps + 1):
        moved = False
        for i in range(n):
            if not active[i]:
                continue
            zi = z[i]
            ratio, lp, la = _horner_g(c, zi)
            if lp <= la + noise_log:
                active[i] = False
                continue
            S = gmpy2.mpc(0)
            for j in range(n):
                if j != i:
                    S += 1 / (zi - z[j])
            w = ratio / (1 - ratio * S)
            z[i] = zi - w
            moved = True
            if abs(w) <= tiny * abs(zi):
                active[i] = False
        if not moved or not any(active):
            return z, sweep
    return z, max_sweeps


def _certify_gmpy(c, z, prec):
    """Inclusion radii n |p(z_i) + err| / |c_n prod (z_i - z_j)| and backward residuals."""
    n = len(z)
    u_log = math.log(4 * (2 * n + 1)) - prec * math.log(2)
    radii, resid = [], []
    lcn = gmpy2.log(abs(c[-1]))
    for i in range(n):
        _, lp, la = _horner_g(c, z[i])
        lbound = max(float(lp), float(la) + u_log) + math.log(2)
        prod = gmpy2.mpfr(1)
        for j in range(n):
            if j != i:
                prod *= abs(z[i] - z[j])  # mpfr exponent range makes under/overflow moot
        lprod = float(gmpy2.log(prod))
        radii.append(math.exp(min(700.0, math.log(n) + lbound - float(lcn) - lprod)))
        resid.append(math.exp(float(lp - la)) if lp != gmpy2.mpfr("-inf") else 0.0)
    return np.array(radii), np.array(resid)


def _certify_double(c, z):
    n = z.size
    u = np.finfo(float).eps
    _, logp, loga = _eval_double(c, z)
    lbound = np.maximum(logp, loga + math.log(4 * (2 * n + 1) * u)) + math.log(2)
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore"):
        lprod = np.log(diff).sum(axis=1)
    lr = math.log(n) + lbound - math.log(abs(c[-1])) - lprod
    return np.exp(np.minimum(lr, 700.0)), np.exp(logp - loga)


def _certified(z, radii, rtol):
    z = np.asarray(z, dtype=complex)
    if not np.all(radii <= rtol * np.maximum(np.abs(z), 1.0)):
        return False
    # disjoint disks: each contains exactly one root
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d > radii[:, None] + radii[None, :]))


def polynomial_roots(coeff_logs, max_prec=512, rtol=1e-12, max_sweeps=200) -> RootResult:
    """Roots of sum_k exp(L_k) y^k.

    ``coeff_logs(prec)`` returns the log-coefficients (ascending): a numpy complex array for
    prec = 53, a list of mpmath mpc computed at working precision otherwise. The polynomial
    is internally balanced so the roots have geometric-mean modulus 1.
    """
    L = np.asarray(coeff_logs(53), dtype=complex)
    n = L.size - 1
    if n < 1 or not np.isfinite(L[-1].real) or not np.isfinite(L[0].real):
        raise ValueError("need degree >= 1 with nonzero leading and constant coefficients")
    if n == 1:
        root = -np.exp(L[0] - L[1])
        return RootResult(np.array([root]), np.zeros(1), np.zeros(1), 53, 0)
    # balance: y = rho x with rho = |c_0 / c_n|^(1/n)
    lrho = (L[0].real - L[-1].real) / n
    k = np.arange(n + 1)
    Lb = L + k * lrho
    Lb = Lb - Lb.real.max()
    c = np.exp(Lb)
    x0 = newton_polygon_start(Lb.real)
    x, sweeps = _aberth_double(c, x0.astype(complex), max_sweeps)
    radii, resid = _certify_double(c, x)
    bits = 53
    if not _certified(x, radii, rtol):
        for prec in [p for p in LADDER[1:] if p <= max_prec]:
            bits = prec
            with mp.workprec(prec + 40):
                Lm = coeff_logs(prec)
                lr = mp.mpf(lrho)
                Lmb = [Lm[j] + j * lr for j in range(n + 1)]
                top = max(v.real for v in Lmb)
                cm = [mp.exp(v - top) for v in Lmb]
            with gmpy2.context(gmpy2.get_context(), precision=prec):
                cg = [_to_gmpy(v) for v in cm]
                zg = [gmpy2.mpc(complex(v)) for v in x]
                zg, sw = _aberth_gmpy(cg, zg, prec, max_sweeps)
                # one Newton polish per root at this precision
                for i in range(n):
                    ratio, _, _ = _horner_g(cg, zg[i])
                    zg[i] = zg[i] - ratio
                radii, resid = _certify_gmpy(cg, zg, prec)
                x = np.array([complex(v) for v in zg])
            sweeps += sw
            _log.debug("rung %d: %d sweeps, max radius %.3g", prec, sw, float(np.max(radii)))
            if _certified(x, radii, rtol):
                break
        else:
            bits = -1
        if bits == -1 or not _certified(x, radii, rtol):
            raise PrecisionExhausted(f"roots of a degree-{n} polynomial not certified at {min(max_prec, 512)} bits")
    if not np.all(np.isfinite(x)):
        raise ConvergenceError("Aberth iteration diverged")
    rho = math.exp(lrho)
    return RootResult(x * rho, resid, radii * rho, bits, sweeps)
