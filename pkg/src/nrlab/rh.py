"""Numerical counterparts of the Cauchy integrals F_n, G_n, the local solution P_n and the
decomposition of their difference m, with jump audits and decay fits."""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contour import ChartSegment, Contour, Gamma1, admissible_contour, gamma1_circle
from .errors import DomainError
from .models import EntireFunctionModel
from .quadrature import integrate
from .saddle import SaddleChart, build_chart, phi, scaling_radius, xi_closed_form
from .sections import section_tail, section_value
from .special import erfc, gaussian_cauchy_h, log_erfc

TWO_PI_I = 2j * math.pi
LEMMAS = ("G_on_Gamma1", "Gamma2_tail", "F_on_Gamma1", "P_on_Gamma1")
_RICHARDSON_OFFSETS = tuple(1e-3 * 2.0**-k for k in range(5))


@dataclass(frozen=True)
class CauchyIntegralResult:
    value: complex
    quadrature_error_estimate: float
    nodes_used: int


@dataclass(frozen=True)
class DecayFit:
    n_values: tuple
    magnitudes: tuple
    fitted_slope: float
    fit_residual: float  # RMS of the fit residuals in log magnitude
    kind: str = "power"  # power: log|I| vs log n; exponential: log|I| vs n
    intercept: float = 0.0

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")

    @property
    def relative_residual(self) -> float:
        """fit_residual over the spread of the fitted log magnitudes."""
        x = np.log(self.n_values) if self.kind == "power" else np.asarray(self.n_values, dtype=float)
        spread = abs(self.fitted_slope) * (x.max() - x.min())
        return self.fit_residual / spread if spread > 0 else math.inf

    def to_dict(self):
        return {"n_values": list(self.n_values), "magnitudes": list(self.magnitudes), "kind": self.kind,
                "fitted_slope": self.fitted_slope, "intercept": self.intercept,
                "fit_residual": self.fit_residual, "relative_residual": self.relative_residual}


def fit_decay(n_values, magnitudes, kind="power") -> DecayFit:
    n = np.asarray(n_values, dtype=float)
    m = np.asarray(magnitudes, dtype=float)
    if np.any(m <= 0):
        raise ValueError("magnitudes must be positive")
    x = np.log(n) if kind == "power" else n
    slope, icpt = np.polyfit(x, np.log(m), 1)
    res = np.log(m) - (slope * x + icpt)
    return DecayFit(tuple(int(v) for v in n_values), tuple(float(v) for v in m), float(slope),
                    float(np.sqrt(np.mean(res**2))), kind, float(icpt))


# --- setup helpers -------------------------------------------------------------------------


@functools.lru_cache(maxsize=16)
def default_contour(lam: float, theta: float, margin: float = 0.05) -> Contour:
    return admissible_contour(lam, theta, margin)


def contour_for(model: EntireFunctionModel, margin: float = 0.05) -> Contour:
    return default_contour(model.profile.lam, model.profile.theta, margin)


def default_epsilon(lam: float) -> float:
    """0.1 at lam = 1, scaled with the chart radius otherwise."""
    return 0.1 * build_chart(lam).radius_V / build_chart(1.0).radius_V


def _normalization_log(model, n):
    """log of C r_n^a (log r_n)^b e^{n/lam}: the factor dividing f(r_n s) s^{-n}."""
    p = model.profile
    lam = p.lam
    r = scaling_radius(n, lam)
    out = math.log(p.leading_constant) + n / lam + p.a * math.log(r)
    if p.b != 0:
        if r <= 1:
            raise DomainError("(log r_n)^b needs r_n > 1")
        out += p.b * math.log(math.log(r))
    return complex(out)


def f_log_density(model: EntireFunctionModel, n: int) -> Callable:
    """s -> log[ f(r_n s) / (C r_n^a (log r_n)^b (e^{1/lam} s)^n) ]."""
    r = scaling_radius(n, model.profile.lam)
    shift = _normalization_log(model, n)
    return lambda s: model.log_evaluate_many(r * s) - n * np.log(s) - shift


def g_log_density(lam: float, n: int) -> Callable:
    return lambda s: n * phi(s, lam)


# --- Cauchy integrals ----------------------------------------------------------------------


def _distance_to(segments, z, m=400):
    return min(float(np.min(np.abs(s.polyline(m) - z))) for s in segments)


def cauchy_integral(segments, log_density, z, tol=1e-12, breakpoints=None) -> CauchyIntegralResult:
    """(1/2 pi i) sum over segments of integral exp(log_density(s)) ds / (s - z).

    The tolerance is split evenly across segments; ``breakpoints`` maps a segment index to
    parameter values where the integrand is nearly singular.
    """
    z = complex(z)
    dist = _distance_to(segments, z)
    if dist < 1e-13:
        raise DomainError(f"z = {z} lies on the contour")
    # rounding in s(t) is amplified by 1/(s - z): no tolerance below that floor is reachable
    length = sum(float(np.abs(np.diff(sg.polyline(64))).sum()) for sg in segments)
    atol = max(tol, 1e-15 * length / dist) / len(segments)
    total, err, used = 0j, 0.0, 0
    for i, seg in enumerate(segments):
        def f(t, seg=seg):
            s = seg.z(t)
            return np.exp(log_density(s)) * seg.dz(t) / (s - z)

        bp = (breakpoints or {}).get(i, ())
        res = integrate(f, 0.0, 1.0, atol=atol, breakpoints=bp, initial=8)
        total += res.value
        err += res.error
        used += res.nodes_used
    return CauchyIntegralResult(total / TWO_PI_I, err / (2 * math.pi), used)


def _nearest_params(segments, z, m=2000):
    """Breakpoints at the parameter of the nearest polyline vertex on each close segment."""
    out = {}
    for i, s in enumerate(segments):
        t = np.linspace(0.0, 1.0, m + 1)
        d = np.abs(s.z(t) - z)
        j = int(np.argmin(d))
        if d[j] < 0.05:
            out[i] = (float(t[j]),)
    return out


def F_n(model: EntireFunctionModel, contour: Contour, n: int, z, tol: float = 1e-12) -> CauchyIntegralResult:
    """(r_n^{-a} (log r_n)^{-b} / 2 pi i C) integral over gamma of (e^{1/lam} s)^{-n} f(r_n s) ds/(s - z)."""
    z = complex(z)
    if z == 0:
        raise DomainError("z must be nonzero")
    return cauchy_integral(contour.segments, f_log_density(model, n), z, tol, _nearest_params(contour.segments, z))


def F_n_closed(model: EntireFunctionModel, n: int, z, inside: bool) -> complex:
    """Closed form: (f - p_{n-1})(r_n z) inside gamma, -p_{n-1}(r_n z) outside, over the normalization."""
    z = complex(z)
    r = scaling_radius(n, model.profile.lam)
    norm = _normalization_log(model, n) + n * cmath.log(z)
    if inside:
        return cmath.exp(section_tail(model, n, r * z) - norm)
    return -cmath.exp(section_value(model, n - 1, r * z).log - norm)


def G_n(contour: Contour, lam: float, n: int, z, tol: float = 1e-12) -> CauchyIntegralResult:
    """(1/2 pi i) integral over gamma_theta of exp(n phi(s)) ds / (s - z)."""
    segs = contour.theta_segments
    z = complex(z)
    return cauchy_integral(segs, g_log_density(lam, n), z, tol, _nearest_params(segs, z))


# --- P_n -------------------------------------------------------------------------------------


def _side_of(xi, side):
    if side is None:
        if xi.real == 0:
            raise DomainError("z lies on the descent path; pass side='left' or 'right'")
        return "left" if xi.real < 0 else "right"
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    return side


def P_n(chart: SaddleChart, n: int, z, side: str | None = None) -> complex:
    """h(-i sqrt(n) psi^{-1}(z)) through the chart."""
    z = complex(z)
    xi = chart.psi_inverse(z)
    if abs(xi) >= chart.radius_V:
        raise DomainError(f"z = {z} is outside the chart domain")
    zeta = -1j * math.sqrt(n) * xi
    s = _side_of(xi, side)
    # left of the path Im zeta > 0; on the path itself pick the requested boundary value
    if s == "left":
        return gaussian_cauchy_h(complex(zeta.real, max(zeta.imag, 1e-300)))
    return gaussian_cauchy_h(complex(zeta.real, min(zeta.imag, -1e-300)))


def P_n_closed(lam: float, n: int, z, side: str | None = None) -> complex:
    """1/2 exp(n phi) erfc(-sqrt(n) xi) on the left, -1/2 exp(n phi) erfc(sqrt(n) xi) on the right,
    with xi from the principal square root of phi."""
    z = complex(z)
    xi = xi_closed_form(z, lam)
    s = _side_of(xi, side)
    u = math.sqrt(n) * xi
    e = n * phi(z, lam)
    if s == "left":
        return 0.5 * cmath.exp(e + log_erfc(-u))
    return -0.5 * cmath.exp(e + log_erfc(u))


def window_limit(w, lam: float) -> complex:
    """e^{lam w^2/2} - 1/2 e^{lam w^2/2} erfc(w sqrt(lam/2))."""
    w = complex(w)
    e = cmath.exp(lam * w * w / 2)
    return e - 0.5 * e * erfc(w * math.sqrt(lam / 2))


# --- jumps -----------------------------------------------------------------------------------


def _richardson(values):
    """Neville table for samples at offsets halving each time (error expansion in powers of h)."""
    T = [list(values)]
    for j in range(1, len(values)):
        prev = T[-1]
        f = 2.0**j
        T.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
    best = T[-1][0]
    est = abs(best - T[-2][-1]) if len(T) > 1 else math.inf
    return best, est


@dataclass(frozen=True)
class JumpCheck:
    kind: str
    z0: complex
    computed: complex
    predicted: complex
    residual: float
    quadrature_error: float
    extrapolation_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance


def _jump(evaluate, z0, normal, predicted, kind, floor=1e-12):
    """Richardson-extrapolated evaluate(z0 + h normal) - evaluate(z0 - h normal)."""
    diffs, qerr = [], 0.0
    for h in _RICHARDSON_OFFSETS:
        vp, ep = evaluate(z0 + h * normal, "left")
        vm, em = evaluate(z0 - h * normal, "right")
        diffs.append(vp - vm)
        qerr += ep + em
    val, rich = _richardson(diffs)
    tol = 10 * (qerr + rich) + floor * max(1.0, abs(predicted))
    return JumpCheck(kind, complex(z0), val, complex(predicted), abs(val - predicted), qerr, rich, tol)


def _arc_points(segments, count, avoid=()):
    """Interior points spread over the segments, with unit left normals."""
    pts = []
    ts = np.linspace(0.2, 0.8, max(1, math.ceil(count / len(segments))))
    for seg in segments:
        for t in ts:
            z = complex(seg.z(np.array([t]))[0])
            d = complex(seg.dz(np.array([t]))[0])
            if any(abs(z - a) < 0.05 for a in avoid):
                continue
            pts.append((z, 1j * d / abs(d)))
    idx = np.linspace(0, len(pts) - 1, count).round().astype(int)
    return [pts[i] for i in idx]


def jump_checks_F(model, contour, n, count=5, tol=1e-10) -> list[JumpCheck]:
    dens = f_log_density(model, n)
    out = []
    for z0, nu in _arc_points(contour.segments, count, avoid=(0j,)):
        ev = lambda z, side: (lambda r: (r.value, r.quadrature_error_estimate))(F_n(model, contour, n, z, tol))
        out.append(_jump(ev, z0, nu, complex(np.exp(dens(np.array([z0]))[0])), "F_n"))
    return out


def jump_checks_G(contour, lam, n, count=5, tol=1e-10) -> list[JumpCheck]:
    out = []
    for z0, nu in _arc_points(contour.theta_segments, count):
        ev = lambda z, side: (lambda r: (r.value, r.quadrature_error_estimate))(G_n(contour, lam, n, z, tol))
        out.append(_jump(ev, z0, nu, cmath.exp(n * phi(z0, lam)), "G_n"))
    return out


def jump_checks_P(lam, n, count=5) -> list[JumpCheck]:
    """At z = psi(i x / sqrt n): P_n^+ - P_n^- against exp(n phi(z))."""
    chart = build_chart(lam)
    out = []
    ymax = 0.8 * chart.radius_V * math.sqrt(n)
    for x in np.linspace(-min(2.0, ymax), min(2.0, ymax), count):
        y = x / math.sqrt(n)
        z0 = complex(chart.psi_forward(1j * y))
        d = complex(1j * chart.psi_derivative(1j * y))
        ev = lambda z, side: (P_n(chart, n, z), 0.0)
        out.append(_jump(ev, z0, 1j * d / abs(d), cmath.exp(n * phi(z0, lam)), "P_n"))
    return out


# --- integrals over Gamma_1 and Gamma_2 --------------------------------------------------------


def _gamma1(model, contour, eps):
    return gamma1_circle(eps, model.profile.lam, contour)


def gamma2_segments(contour: Contour, g1: Gamma1) -> list:
    """gamma outside B_{2 eps}(1): the descent arc loses |y| < y1."""
    lam = contour.lam
    yb = contour.descent_half_height
    return [ChartSegment(lam, g1.y1, yb)] + list(contour.segments[1:]) + [ChartSegment(lam, -yb, -g1.y1)]


def _gamma1_integral(g1: Gamma1, values, z, rtol, atol):
    """(1/2 pi i) integral over Gamma_1 of X(s) ds / (s - z); ``values(s, side)`` gives X."""
    total, err, used = 0j, 0.0, 0
    for seg, side in ((g1.right, "right"), (g1.left, "left")):
        def f(t, seg=seg, side=side):
            s = seg.z(t)
            x = np.array([values(complex(v), side) for v in s])
            return x * seg.dz(t) / (s - z)

        res = integrate(f, 0.0, 1.0, atol=atol, rtol=rtol, initial=4)
        total += res.value
        err += res.error
        used += res.nodes_used
    return CauchyIntegralResult(total / TWO_PI_I, err / (2 * math.pi), used)


def integral_G_on_gamma1(model, contour, n, z, eps=None, rtol=1e-7, atol=1e-300, inner_tol=1e-13):
    eps = default_epsilon(model.profile.lam) if eps is None else eps
    g1 = _gamma1(model, contour, eps)
    lam = model.profile.lam
    return _gamma1_integral(g1, lambda s, side: G_n(contour, lam, n, s, inner_tol).value, z, rtol, atol)


def integral_F_on_gamma1(model, contour, n, z, eps=None, rtol=1e-7, atol=1e-300):
    eps = default_epsilon(model.profile.lam) if eps is None else eps
    g1 = _gamma1(model, contour, eps)
    # the left arc of Gamma_1 lies inside gamma, the right arc outside
    return _gamma1_integral(g1, lambda s, side: F_n_closed(model, n, s, side == "left"), z, rtol, atol)


def integral_P_on_gamma1(model, contour, n, z, eps=None, rtol=1e-9, atol=1e-300):
    eps = default_epsilon(model.profile.lam) if eps is None else eps
    g1 = _gamma1(model, contour, eps)
    lam = model.profile.lam
    return _gamma1_integral(g1, lambda s, side: P_n_closed(lam, n, s, side), z, rtol, atol)


def integral_gamma2(model, contour, n, z, eps=None, tol=1e-300, rtol=1e-8):
    """r_n^{-a} (log r_n)^{-b} / (2 pi i C) integral over Gamma_2 of the F_n density."""
    eps = default_epsilon(model.profile.lam) if eps is None else eps
    g1 = _gamma1(model, contour, eps)
    segs = gamma2_segments(contour, g1)
    dens = f_log_density(model, n)
    total, err, used = 0j, 0.0, 0
    for seg in segs:
        def f(t, seg=seg):
            s = seg.z(t)
            return np.exp(dens(s)) * seg.dz(t) / (s - z)

        res = integrate(f, 0.0, 1.0, atol=tol, rtol=rtol, initial=8)
        total += res.value
        err += res.error
        used += res.nodes_used
    return CauchyIntegralResult(total / TWO_PI_I, err / (2 * math.pi), used)


def lemma_decay_suite(which: str, model: EntireFunctionModel, contour: Contour | None, n_grid: Sequence[int],
                      z_probe=None, eps: float | None = None) -> DecayFit:
    """Magnitude of the named integral per n with a log-log (or log-linear for the Gamma_2 tail) fit."""
    if which not in LEMMAS:
        raise ValueError(f"which must be one of {LEMMAS}")
    contour = contour_for(model) if contour is None else contour
    eps = default_epsilon(model.profile.lam) if eps is None else eps
    z = 1 - 0.5 * eps if z_probe is None else complex(z_probe)
    if abs(z - 1) >= eps:
        raise DomainError("z_probe must lie in B_eps(1)")
    fn = {"G_on_Gamma1": integral_G_on_gamma1, "F_on_Gamma1": integral_F_on_gamma1,
          "P_on_Gamma1": integral_P_on_gamma1, "Gamma2_tail": integral_gamma2}[which]
    mags = [abs(fn(model, contour, n, z, eps).value) for n in n_grid]
    return fit_decay(n_grid, mags, "exponential" if which == "Gamma2_tail" else "power")


@dataclass(frozen=True)
class MDecomposition:
    n: int
    z: complex
    terms: dict  # name -> complex, already signed as they enter m
    m: complex
    g_minus_p: complex
    discrepancy: float
    error_estimate: float

    def to_dict(self):
        c = lambda v: [v.real, v.imag]
        return {"n": self.n, "z": c(self.z), "terms": {k: c(v) for k, v in self.terms.items()},
                "m": c(self.m), "g_minus_p": c(self.g_minus_p), "discrepancy": self.discrepancy,
                "error_estimate": self.error_estimate}


def m_decomposition(model, contour=None, n=64, z=1.02, tol=1e-11, eps=None) -> MDecomposition:
    """The four boundary integrals whose sum is m(z) = (G_n - P_n)(z) on B_eps(1)."""
    contour = contour_for(model) if contour is None else contour
    lam = model.profile.lam
    eps = default_epsilon(lam) if eps is None else eps
    z = complex(z)
    if abs(z - 1) >= eps:
        raise DomainError("z must lie in B_eps(1)")
    p = integral_P_on_gamma1(model, contour, n, z, eps, rtol=0, atol=tol)
    g = integral_G_on_gamma1(model, contour, n, z, eps, rtol=0, atol=tol)
    f = integral_F_on_gamma1(model, contour, n, z, eps, rtol=0, atol=tol)
    t2 = integral_gamma2(model, contour, n, z, eps, tol=tol, rtol=0)
    terms = {"P_on_Gamma1": -p.value, "G_on_Gamma1": g.value, "F_on_Gamma1": -f.value, "Gamma2": t2.value}
    m = sum(terms.values())
    gz = G_n(contour, lam, n, z, tol)
    gp = gz.value - P_n_closed(lam, n, z)
    err = p.quadrature_error_estimate + g.quadrature_error_estimate + f.quadrature_error_estimate \
        + t2.quadrature_error_estimate + gz.quadrature_error_estimate
    return MDecomposition(n, z, terms, m, gp, abs(m - gp), err)


def fn_gn_agreement(model, contour=None, n_grid=(32, 64, 128, 256, 512), w=-1.0, tol=1e-12) -> DecayFit:
    """|F_n - G_n| at z = 1 + w / sqrt(n)."""
    contour = contour_for(model) if contour is None else contour
    w = complex(w)
    if w.real >= 0:
        raise DomainError("w must satisfy Re w < 0")
    lam = model.profile.lam
    mags = []
    for n in n_grid:
        z = 1 + w / math.sqrt(n)
        mags.append(abs(F_n(model, contour, n, z, tol).value - G_n(contour, lam, n, z, tol).value))
    return fit_decay(n_grid, [max(m, 1e-300) for m in mags], "power")


@dataclass(frozen=True)
class PipelineRow:
    n: int
    w: complex
    F_value: complex
    limit: complex  # e^{lam w^2/2} - 1/2 e^{lam w^2/2} erfc(w sqrt(lam/2))
    F_error: float
    ratio: complex  # p_{n-1}/f recovered from F_n
    target: complex  # 1/2 erfc(w sqrt(lam/2))
    ratio_error: float
    quadrature_error: float


def theorem1_pipeline(model, n: int, w_grid, contour=None, tol=1e-12) -> list[PipelineRow]:
    """F_n(1 + w/sqrt n) from the contour integral, its window limit, and the section-to-function
    ratio 1 - F_n * normalization / f recovered from it."""
    contour = contour_for(model) if contour is None else contour
    lam = model.profile.lam
    r = scaling_radius(n, lam)
    rows = []
    for w in w_grid:
        w = complex(w)
        if w.real >= 0:
            raise DomainError("window points for the scaled ratio need Re w < 0")
        z = 1 + w / math.sqrt(n)
        res = F_n(model, contour, n, z, tol)
        lim = window_limit(w, lam)
        # F_n = (f - p_{n-1})(r_n z) / N with N = C r_n^a (log r_n)^b (e^{1/lam} z)^n inside gamma
        log_scale = _normalization_log(model, n) + n * cmath.log(z) - model.log_evaluate(r * z)
        ratio = 1 - res.value * cmath.exp(log_scale)
        target = 0.5 * erfc(w * math.sqrt(lam / 2))
        rows.append(PipelineRow(n, w, res.value, lim, abs(res.value - lim), ratio, target, abs(ratio - target),
                                res.quadrature_error_estimate))
    return rows
