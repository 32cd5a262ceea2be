"""Saddle function phi(z) = (z^lam - 1 - lam Log z) / lam and its local geometry at z = 1."""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import ContinuationError, DomainError

_SMALL_U = 0.25


def _expm1mx(x):
    """e^x - 1 - x for complex arrays, by series where |x| is small."""
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    small = np.abs(x) < 0.5
    if np.any(~small):
        xb = x[~small]
        out[~small] = np.exp(xb) - 1 - xb
    if np.any(small):
        xs = x[small]
        term = xs * xs / 2
        acc = term.copy()
        for k in range(3, 24):
            term = term * xs / k
            acc = acc + term
        out[small] = acc
    return out


def _log(z):
    """Principal Log z, accurate near z = 1 through 2 atanh(u / (2 + u))."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    u = z - 1
    out = np.log(z)
    near = np.abs(u) < _SMALL_U
    if np.any(near):
        un = u[near]
        out[near] = 2 * np.arctanh(un / (2 + un))
    return out


def phi(z, lam: float):
    """phi(z) = (z^lam - 1 - Log z^lam) / lam with Log z^lam = lam Log z; accepts arrays."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("phi is singular at z = 0")
    x = lam * _log(z)
    out = _expm1mx(x) / lam
    return complex(out[0]) if scalar else out.reshape(z.shape)


def phi_prime(z, lam: float):
    """phi'(z) = (z^lam - 1) / z."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    out = np.expm1(lam * _log(z)).reshape(z.shape) / z
    return complex(out) if scalar else out


def phi_second(z, lam: float):
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    out = (lam - 1) * np.exp((lam - 2) * _log(z)).reshape(z.shape) + 1 / (z * z)
    return complex(out) if scalar else out


def scaling_radius(n: int, lam: float) -> float:
    """r_n = (n / lam)^(1 / lam)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n / lam) ** (1.0 / lam)


# --- level curve Re phi = 0 ------------------------------------------------------------


def _level_radius(t, lam, level=0.0, rho0=None, tol=1e-15):
    """Radius rho in (0, 1] with Re phi(rho e^{it}) = level, for level <= 0.

    g(rho) = rho^lam cos(lam t) - 1 - lam log rho - lam level is strictly decreasing on (0, 1],
    so Newton from the previous vertex (predictor) is safeguarded by a bisection bracket.
    """
    c = math.cos(lam * t)
    g = lambda r: r**lam * c - 1 - lam * math.log(r) - lam * level
    hi = 1.0
    if g(hi) > 0:
        raise ContinuationError(f"level {level} not reached on the ray arg z = {t}")
    lo = 0.5
    while g(lo) <= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise ContinuationError("level curve radius underflow")
    r = rho0 if rho0 is not None and lo < rho0 <= hi else 0.5 * (lo + hi)
    for _ in range(200):
        gr = g(r)
        if gr > 0:
            lo = r
        else:
            hi = r
        dg = lam * (r ** (lam - 1) * c - 1 / r)
        step = gr / dg if dg != 0 else 0.0
        rn = r - step
        if not (lo < rn < hi) or dg == 0:
            rn = 0.5 * (lo + hi)
        if abs(rn - r) <= tol * r or hi - lo <= tol * hi:
            return rn
        r = rn
    raise ContinuationError(f"level curve corrector stalled at t = {t}")


def limit_curve(lam: float, resolution: int = 256) -> np.ndarray:
    """Closed polyline (first vertex repeated last) tracing the bounded part of Re phi = 0 through 1.

    The curve is star-shaped about 0: every ray meets it once in (0, 1]. Vertices are placed on
    a polar grid, refined until consecutive chords are at most perimeter / resolution, and
    mirrored so the polyline is exactly conjugation-symmetric.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    ts = list(np.linspace(0.0, math.pi, resolution // 2 + 1))
    rho = {}
    prev = None
    for t in ts:
        prev = rho[t] = _level_radius(t, lam, rho0=prev)
    for _ in range(30):
        pts = [rho[t] * cmath.exp(1j * t) for t in ts]
        chords = [abs(b - a) for a, b in zip(pts, pts[1:])]
        target = 2 * sum(chords) / resolution
        new = [0.5 * (a + b) for a, b, c in zip(ts, ts[1:], chords) if c > target]
        if not new:
            break
        for t in new:
            rho[t] = _level_radius(t, lam)
        ts = sorted(rho)
    upper = np.array([rho[t] * cmath.exp(1j * t) for t in ts])
    upper[0] = 1.0
    upper[-1] = complex(upper[-1].real, 0.0)
    lower = np.conj(upper[-2:0:-1])
    return np.concatenate([upper, lower, upper[:1]])


# --- steepest descent ------------------------------------------------------------------


def _descent_corrector(z, lam, tol=1e-14, maxit=30):
    """Project onto Im phi = 0 along the level direction of Re phi.

    Near the saddle Im phi ~ 2 Re xi Im xi, so the tolerance scales with |z - 1| to keep the
    chart coordinate on the imaginary axis.
    """
    scale = min(1.0, abs(z - 1))
    for _ in range(maxit):
        f = phi(z, lam).imag
        d = phi_prime(z, lam)
        if abs(f) <= tol * scale:
            return z
        z = z - 1j * f * d.conjugate() / abs(d) ** 2
    if abs(phi(z, lam).imag) <= 10 * tol * scale:
        return z
    return None


def steepest_descent_path(lam: float, arclength: float, h0: float = 1e-6, hmax: float = 0.02):
    """Upward and downward branches from z = 1 of the curve Im phi = 0 along which Re phi decreases.

    Adaptive predictor (normalised descent direction) and corrector (Newton onto Im phi = 0),
    step halving on corrector failure. Returns ``(upper, lower)`` arrays starting at 1.
    """
    if arclength <= 0:
        raise ValueError("arclength must be positive")
    z = _descent_corrector(1 + 1j * h0, lam)
    if z is None:
        raise ContinuationError("cannot leave the saddle")
    pts = [1 + 0j, z]
    s = abs(z - 1)
    h = min(hmax, 4 * h0)
    while s < arclength:
        d = phi_prime(z, lam)
        if d == 0:
            raise ContinuationError(f"descent path hit a critical point at {z}")
        step = min(h, arclength - s)
        zn = _descent_corrector(z - step * d.conjugate() / abs(d), lam)
        if zn is None or phi(zn, lam).real >= phi(z, lam).real or abs(zn - z) > 2 * step or zn == 0:
            h *= 0.5
            if h < 1e-12:
                raise ContinuationError(f"descent continuation stalled near {z}")
            continue
        s += abs(zn - z)
        z = zn
        pts.append(z)
        h = min(hmax, 1.5 * h, 0.05 * abs(z))
    upper = np.array(pts)
    return upper, np.conj(upper)


# --- chart ------------------------------------------------------------------------------

_CHART_ORDER = 72
_CHART_DPS = 50


def _mp_series_mul(a, b, order):
    return [mp.fsum(a[i] * b[m - i] for i in range(m + 1)) for m in range(order + 1)]


@functools.lru_cache(maxsize=32)
def _chart_coefficients(lam, order=_CHART_ORDER):
    """Reversion coefficients d_k of u(xi) = psi(xi) - 1 (index = power).

    Done in 50-digit arithmetic: the Lagrange powers cancel catastrophically in double.
    """
    with mp.workdps(_CHART_DPS):
        L = mp.mpf(lam)
        # phi(1 + u) = sum a_k u^k with a_k = (binom(lam, k) - lam (-1)^{k+1} / k) / lam
        a = [mp.mpf(0), mp.mpf(0)] + [
            (mp.binomial(L, k) - L * (-1) ** (k + 1) / mp.mpf(k)) / L for k in range(2, order + 3)
        ]
        c = [mp.mpf(0)] + [a[k + 2] / a[2] for k in range(1, order + 1)]
        # s = sqrt(1 + c)
        s = [mp.mpf(1)] + [mp.mpf(0)] * order
        for m in range(1, order + 1):
            s[m] = (c[m] - mp.fsum(s[i] * s[m - i] for i in range(1, m))) / 2
        xu = [mp.sqrt(a[2]) * v for v in s]  # xi(u) / u
        g = [1 / xu[0]] + [mp.mpf(0)] * order
        for m in range(1, order + 1):
            g[m] = -mp.fsum(xu[i] * g[m - i] for i in range(1, m + 1)) / xu[0]
        d = [0.0] * (order + 1)
        gp = [mp.mpf(1)] + [mp.mpf(0)] * order
        for k in range(1, order + 1):
            gp = _mp_series_mul(gp, g, order)
            d[k] = float(gp[k - 1] / k)
    return np.array(d)


@dataclass(frozen=True)
class SaddleChart:
    """Local chart psi with phi(psi(xi)) = xi^2, psi(0) = 1, psi'(0) = sqrt(2 / lam) > 0.

    branch_tag: Re psi^{-1}(z) < 0 exactly to the left of the upward descent path, so that
    Im(-i sqrt(n) psi^{-1}(z)) > 0 there.
    """

    lam: float
    radius_V: float
    coefficients: tuple
    branch_tag: str = "re_xi_negative_left"

    def psi_forward(self, xi):
        d = np.asarray(self.coefficients)
        return 1 + np.polyval(d[::-1], xi)

    def psi_derivative(self, xi):
        d = np.asarray(self.coefficients)
        k = np.arange(d.size)
        return np.polyval((k[1:] * d[1:])[::-1], xi)

    def psi_inverse(self, z, tol=1e-15, maxit=50):
        """Newton inversion of the reversion series, seeded from the quadratic model."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        xi = math.sqrt(self.lam / 2) * (z - 1)
        for _ in range(maxit):
            step = (self.psi_forward(xi) - z) / self.psi_derivative(xi)
            xi = xi - step
            if np.all(np.abs(step) <= tol * np.maximum(np.abs(xi), 1e-300)):
                break
        else:
            if np.any(np.abs(step) > 1e-12):
                raise DomainError("psi inverse did not converge; point outside the chart")
        return complex(xi[0]) if scalar else xi

    def in_domain(self, z, shrink=0.9):
        xi = self.psi_inverse(z)
        return np.abs(xi) < shrink * self.radius_V


def xi_closed_form(z, lam):
    """psi^{-1}(z) without the series: (z - 1) sqrt(lam / 2) sqrt(q), q = 2 phi / (lam (z - 1)^2).

    q is near 1 on the chart domain so the principal square root selects the chart branch.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    u = z - 1
    with np.errstate(invalid="ignore", divide="ignore"):
        q = 2 * phi(z, lam) / (lam * u * u)
    q = np.where(u == 0, 1.0, q)
    out = u * math.sqrt(lam / 2) * np.sqrt(q)
    return complex(out) if scalar else out


@functools.lru_cache(maxsize=32)
def build_chart(lam: float, tol: float = 1e-12) -> SaddleChart:
    """Chart by series reversion; radius_V is the largest radius whose validation ring passes."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    d = _chart_coefficients(float(lam))
    chart = SaddleChart(float(lam), 0.0, tuple(d))
    ring = np.exp(2j * np.pi * (np.arange(96) + 0.5) / 96)
    good = 0.0
    for r in np.arange(0.02, 3.0, 0.02):
        xi = r * ring
        z = chart.psi_forward(xi)
        if np.any(np.abs(z) < 1e-3) or not np.all(np.isfinite(z)):
            break
        try:
            err_phi = np.max(np.abs(phi(z, lam) - xi * xi))
            back = chart.psi_inverse(z)
        except DomainError:
            break
        if err_phi > tol or np.max(np.abs(back - xi)) > tol:
            break
        # principal-branch sqrt must reproduce the chart, else the closed form disagrees
        if np.max(np.abs(xi_closed_form(z, lam) - xi)) > 1e-10:
            break
        good = r
    if good == 0.0:
        raise ContinuationError("chart validation failed at the smallest radius")
    return SaddleChart(float(lam), float(good), tuple(d))


# --- Delta circle and sigma points ------------------------------------------------------


@dataclass(frozen=True)
class SigmaPoints:
    sigma1: complex
    sigma2: complex
    re_phi: float
    radius: float


def descent_circle_intersection(lam: float, radius: float, arclength: float | None = None) -> complex:
    """Upper intersection of |z - 1| = radius with the descent path, by 2D Newton."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    upper, _ = steepest_descent_path(lam, arclength or 4 * radius + 1.0)
    dist = np.abs(upper - 1)
    idx = np.nonzero(dist >= radius)[0]
    if idx.size == 0:
        raise ContinuationError("descent path ends before reaching the circle")
    i = idx[0]
    a, b = upper[i - 1], upper[i]
    # chord bisection for the seed, then Newton on (|z-1|^2 - R^2, Im phi)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        m = 0.5 * (lo + hi)
        if abs(a + m * (b - a) - 1) < radius:
            lo = m
        else:
            hi = m
    z = a + lo * (b - a)
    for _ in range(40):
        u = z - 1
        F = np.array([abs(u) ** 2 - radius**2, phi(z, lam).imag])
        d = phi_prime(z, lam)
        # gradients in (x, y): Im phi has gradient (Im d, Re d)
        J = np.array([[2 * u.real, 2 * u.imag], [d.imag, d.real]])
        dx = np.linalg.solve(J, -F)
        z = z + complex(dx[0], dx[1])
        if np.hypot(*dx) < 1e-16:
            break
    return complex(z)


def sigma_points(lam: float, theta: float) -> SigmaPoints:
    """Intersections of the descent path with the circle centred at 1 tangent to arg z = +-theta."""
    if not 0 < theta < min(math.pi, math.pi / lam):
        raise ValueError("theta must lie in (0, min(pi, pi/lambda))")
    if theta >= math.pi / 2:
        raise ValueError("the circle tangent to arg z = +-theta needs theta < pi/2")
    R = math.sin(theta)
    s1 = descent_circle_intersection(lam, R)
    return SigmaPoints(s1, s1.conjugate(), phi(s1, lam).real, R)
