"""Parametrized contours: admissible contours around the saddle and the circle Gamma_1."""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ContinuationError, DomainError
from .quadrature import integrate
from .saddle import build_chart, phi, phi_prime

ROLES = ("steepest_descent", "level_avoiding", "unit_circle", "gamma1_circle")


class Segment:
    """Oriented arc z(t), t in [0, 1], with derivative dz(t)."""

    role: str = ""
    in_sector: bool = True

    def z(self, t):
        raise NotImplementedError

    def dz(self, t):
        raise NotImplementedError

    def polyline(self, m=64):
        return self.z(np.linspace(0.0, 1.0, m + 1))

    @property
    def start(self):
        return complex(self.z(np.array([0.0]))[0])

    @property
    def end(self):
        return complex(self.z(np.array([1.0]))[0])

    def length(self):
        return integrate(lambda t: np.abs(self.dz(t)), atol=1e-12).value.real

    def to_dict(self, m=64):
        p = self.polyline(m)
        return {"role": self.role, "in_sector": self.in_sector, "kind": type(self).__name__,
                "re": p.real.tolist(), "im": p.imag.tolist()}


@dataclass(frozen=True)
class ChartSegment(Segment):
    """psi(i y) for y from y0 to y1: the steepest-descent path in exact chart coordinates."""

    lam: float
    y0: float
    y1: float
    role: str = "steepest_descent"
    in_sector: bool = True

    def z(self, t):
        ch = build_chart(self.lam)
        return ch.psi_forward(1j * (self.y0 + (self.y1 - self.y0) * np.asarray(t)))

    def dz(self, t):
        ch = build_chart(self.lam)
        y = self.y0 + (self.y1 - self.y0) * np.asarray(t)
        return 1j * (self.y1 - self.y0) * ch.psi_derivative(1j * y)


@dataclass(frozen=True)
class ArcSegment(Segment):
    center: complex
    radius: float
    a0: float
    a1: float
    role: str = "unit_circle"
    in_sector: bool = True

    def z(self, t):
        return self.center + self.radius * np.exp(1j * (self.a0 + (self.a1 - self.a0) * np.asarray(t)))

    def dz(self, t):
        a = self.a0 + (self.a1 - self.a0) * np.asarray(t)
        return 1j * (self.a1 - self.a0) * self.radius * np.exp(1j * a)


class SplineSegment(Segment):
    """Cubic spline through traced vertices, parametrized by normalized chord length."""

    def __init__(self, vertices, role="level_avoiding", in_sector=True):
        v = np.asarray(vertices, dtype=complex)
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(v)))])
        s /= s[-1]
        self.vertices = v
        self._re = CubicSpline(s, v.real)
        self._im = CubicSpline(s, v.imag)
        self.role = role
        self.in_sector = in_sector

    def z(self, t):
        t = np.asarray(t)
        return self._re(t) + 1j * self._im(t)

    def dz(self, t):
        t = np.asarray(t)
        return self._re(t, 1) + 1j * self._im(t, 1)

    def tangent_at(self, t):
        d = complex(self.dz(np.array([t]))[0])
        return d / abs(d)

    def restrict(self, t0, t1):
        """Subarc as a new spline sampled on the original vertices' parameter density."""
        m = max(8, int(len(self.vertices) * (t1 - t0)) + 2)
        return SplineSegment(self.z(np.linspace(t0, t1, m)), self.role, self.in_sector)


@dataclass(frozen=True)
class HermiteSegment(Segment):
    """Cubic Hermite blend p0 -> p1 with end derivatives m0, m1 (C^1 join)."""

    p0: complex
    m0: complex
    p1: complex
    m1: complex
    role: str = "level_avoiding"
    in_sector: bool = True

    def z(self, t):
        t = np.asarray(t)
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * self.p0 + (t3 - 2 * t2 + t) * self.m0
                + (-2 * t3 + 3 * t2) * self.p1 + (t3 - t2) * self.m1)

    def dz(self, t):
        t = np.asarray(t)
        t2 = t * t
        return ((6 * t2 - 6 * t) * self.p0 + (3 * t2 - 4 * t + 1) * self.m0
                + (-6 * t2 + 6 * t) * self.p1 + (3 * t2 - 2 * t) * self.m1)


class MirrorSegment(Segment):
    """conj(base(1 - t)): the mirror image traversed so orientation is preserved."""

    def __init__(self, base):
        self.base = base
        self.role = base.role
        self.in_sector = base.in_sector

    def z(self, t):
        return np.conj(self.base.z(1 - np.asarray(t)))

    def dz(self, t):
        return -np.conj(self.base.dz(1 - np.asarray(t)))


@dataclass
class Contour:
    segments: list
    lam: float
    theta: float
    margin: float = 0.0  # achieved d: max Re phi <= -d on the level-avoiding part
    level: float = 0.0  # traced level Re phi = -level
    descent_half_height: float = 0.0  # descent arc is psi(i y), |y| <= this
    sigma: tuple = ()
    intersection_points: dict = field(default_factory=dict)
    orientation: str = "counterclockwise"

    @property
    def theta_segments(self):
        return [s for s in self.segments if s.in_sector]

    def polyline(self, m=64):
        pts = [s.polyline(m)[:-1] for s in self.segments]
        pts.append(np.array([self.segments[-1].end]))
        return np.concatenate(pts)

    def winding_number(self, z0=0.0, atol=1e-10):
        total = sum(integrate(lambda t, s=s: s.dz(t) / (s.z(t) - z0), atol=atol).value for s in self.segments)
        return total / (2j * math.pi)

    def contains(self, z, m=400):
        """Inside test by the winding of a dense polyline (valid away from the curve)."""
        p = self.polyline(m)
        d = np.angle((p[1:] - z) / (p[:-1] - z))
        return abs(d.sum()) > math.pi

    def to_json(self, m=64):
        return json.dumps({
            "lambda": self.lam, "theta": self.theta, "margin": self.margin, "level": self.level,
            "orientation": self.orientation,
            "segments": [s.to_dict(m) for s in self.segments],
        })


# --- construction -----------------------------------------------------------------------


def _trace_level(z0, lam, level, stop, direction, h=0.004, max_steps=20000):
    """Trace Re phi = -level from z0 heading along ``direction`` until ``stop(z)`` becomes true."""
    def correct(z):
        for _ in range(30):
            f = phi(z, lam).real + level
            d = phi_prime(z, lam)
            if abs(f) <= 1e-14:
                return z
            z = z - f * d.conjugate() / abs(d) ** 2
        return z if abs(phi(z, lam).real + level) <= 1e-12 else None

    pts = [z0]
    z = z0
    d = phi_prime(z, lam)
    tang = 1j * d.conjugate() / abs(d)
    if (tang * direction.conjugate()).real < 0:
        tang = -tang
    for _ in range(max_steps):
        zn = correct(z + h * tang)
        if zn is None:
            h *= 0.5
            if h < 1e-10:
                raise ContinuationError(f"level-curve continuation stalled near {z}")
            continue
        pts.append(zn)
        if stop(zn):
            return np.array(pts)
        d = phi_prime(zn, lam)
        nt = 1j * d.conjugate() / abs(d)
        tang = nt if (nt * tang.conjugate()).real > 0 else -nt
        z = zn
    raise ContinuationError("level curve did not reach its target")


def admissible_contour(lam: float, theta: float, margin: float, max_tries: int = 40) -> Contour:
    """Counterclockwise admissible contour.

    Pieces (upper half, mirrored below): the chart descent arc psi(i y) up to a blend point, a
    C^1 Hermite blend onto the level curve Re phi = -L traced from the descent path to the
    unit circle, a blend onto the circle, and the unit circle through -1. Blends take a
    quarter of the traced level arc at each end. The recorded margin d is the measured
    -max Re phi over blends, level arcs and in-sector circle arcs; L is raised until d >= margin.
    """
    if not 0 < theta < min(math.pi, math.pi / lam):
        raise ValueError("theta must lie in (0, min(pi, pi/lambda))")
    if margin <= 0:
        raise ValueError("margin must be positive")
    level = 1.05 * margin
    last = None
    for _ in range(max_tries):
        try:
            return _build(lam, theta, margin, level)
        except _MarginShort as exc:
            last = exc
            level *= 1.08
    raise ContinuationError(f"no admissible contour with margin {margin}: {last}")


class _MarginShort(Exception):
    pass


def _build(lam, theta, margin, level):
    chart = build_chart(lam)
    y_d = math.sqrt(level)
    if y_d >= 0.9 * chart.radius_V:
        raise ContinuationError(f"margin {margin} needs a descent arc beyond the chart (radius {chart.radius_V:.3g})")
    c = 1 - lam * level
    if c <= -1:
        raise ContinuationError(f"level {level:.3g} never meets the unit circle")
    t1 = math.acos(c) / lam
    if t1 >= theta:
        raise ContinuationError(f"level {level:.3g} meets the unit circle outside the sector; reduce the margin")
    D = complex(chart.psi_forward(1j * y_d))
    trace = _trace_level(D, lam, level, stop=lambda z: abs(z) <= 1.0, direction=-1 + 0j,
                         h=min(0.004, 0.02 * abs(D - cmath.exp(1j * t1)) + 1e-4))
    trace[-1] = cmath.exp(1j * t1)
    if np.any(np.abs(np.angle(trace)) > theta):
        raise ContinuationError("level curve leaves the growth sector before reaching the unit circle")
    spline = SplineSegment(trace)
    total = float(np.abs(np.diff(trace)).sum())
    cut = 0.25 * total
    # descent-side blend point: |psi(i y_b) - D| = cut
    lo, hi = 0.0, y_d
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if abs(complex(chart.psi_forward(1j * mid)) - D) > cut:
            lo = mid
        else:
            hi = mid
    y_b = lo
    descent = ChartSegment(lam, -y_b, y_b)
    Pb = descent.end
    Tb = complex(descent.dz(np.array([1.0]))[0])
    Tb /= abs(Tb)
    ta, tb = 0.25, 0.75
    level_arc = spline.restrict(ta, tb)
    Q0, Q0t = level_arc.start, spline.tangent_at(ta)
    Q1, Q1t = level_arc.end, spline.tangent_at(tb)
    tc = t1 + cut
    if tc >= theta:
        raise ContinuationError("blend onto the unit circle crosses arg z = theta; reduce the margin")
    C1 = cmath.exp(1j * tc)
    blend1 = HermiteSegment(Pb, Tb * abs(Q0 - Pb), Q0, Q0t * abs(Q0 - Pb))
    blend2 = HermiteSegment(Q1, Q1t * abs(C1 - Q1), C1, 1j * C1 * abs(C1 - Q1))
    arc_in = ArcSegment(0j, 1.0, tc, theta)
    arc_out = ArcSegment(0j, 1.0, theta, 2 * math.pi - theta, in_sector=False)
    arc_in_low = ArcSegment(0j, 1.0, 2 * math.pi - theta, 2 * math.pi - tc)
    segs = [descent, blend1, level_arc, blend2, arc_in, arc_out, arc_in_low,
            MirrorSegment(blend2), MirrorSegment(level_arc), MirrorSegment(blend1)]
    worst = -np.inf
    for s in segs:
        if s.role == "steepest_descent" or not s.in_sector:
            continue
        zz = s.polyline(400)
        if np.any(np.abs(np.angle(zz)) > theta + 1e-12):
            raise ContinuationError("a blend leaves the growth sector")
        worst = max(worst, float(np.max(phi(zz, lam).real)))
    d = -worst
    if d < margin:
        raise _MarginShort(f"achieved margin {d:.4g} below requested {margin:.4g} at level {level:.4g}")
    sig = ()
    if theta < math.pi / 2:
        from .saddle import sigma_points

        sp = sigma_points(lam, theta)
        sig = (sp.sigma1, sp.sigma2)
    return Contour(segs, float(lam), float(theta), d, level, y_b, sig,
                   {"descent_end": Pb, "unit_circle_join": complex(C1)})


# --- Gamma_1 ----------------------------------------------------------------------------


@dataclass
class Gamma1:
    """Counterclockwise circle |s - 1| = 2 eps split at its crossings s1 (upper), s2 with the descent arc."""

    eps: float
    radius: float
    s1: complex
    s2: complex
    y1: float  # s1 = psi(i y1)
    left: ArcSegment  # s1 -> 1 - 2 eps -> s2, left of the descent arc
    right: ArcSegment  # s2 -> 1 + 2 eps -> s1

    @property
    def segments(self):
        return [self.right, self.left]


def gamma1_circle(eps: float, lam: float, contour: Contour | None = None) -> Gamma1:
    """Gamma_1 = boundary of B_{2 eps}(1) with its intersection points with the descent arc."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    chart = build_chart(lam)
    R = 2 * eps
    ring = 1 + R * np.exp(2j * np.pi * np.arange(128) / 128)
    try:
        xi = chart.psi_inverse(ring)
    except DomainError as exc:
        raise DomainError(f"B_(2 eps)(1) with eps = {eps} leaves the chart") from exc
    if np.max(np.abs(xi)) >= 0.9 * chart.radius_V:
        raise DomainError(f"B_(2 eps)(1) with eps = {eps} leaves the chart")
    # |psi(i y) - 1| is increasing in y near 0: bisection then Newton
    g = lambda y: abs(complex(chart.psi_forward(1j * y)) - 1) - R
    lo, hi = 0.0, 0.9 * chart.radius_V
    if g(hi) <= 0:
        raise DomainError("circle does not meet the descent arc inside the chart")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    y1 = 0.5 * (lo + hi)
    if contour is not None and y1 >= contour.descent_half_height:
        raise DomainError("Gamma_1 must cross the contour on its descent arc")
    s1 = complex(chart.psi_forward(1j * y1))
    a1 = cmath.phase(s1 - 1)
    right = ArcSegment(1 + 0j, R, -a1, a1, role="gamma1_circle")
    left = ArcSegment(1 + 0j, R, a1, 2 * math.pi - a1, role="gamma1_circle")
    return Gamma1(eps, R, s1, s1.conjugate(), y1, left, right)
