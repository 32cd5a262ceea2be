"""Sections p_n of entire functions: split-log evaluation, window ratios and zero clouds."""
from __future__ import annotations

import cmath
import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp
import numpy as np

from .errors import CertificationError, DomainError, PrecisionExhausted, RangeExceeded
from .models import EntireFunctionModel, ExpModel, MittagLefflerModel
from .roots import LADDER, polynomial_roots
from .saddle import limit_curve, scaling_radius
from .series import logsumexp_complex, mp_logsumexp, rounding_bound
from .special import erfc, erfc_zeros, erfcx
from .winding import circle, winding_number

SCALINGS = ("by_n", "by_r_n", "none")


@dataclass(frozen=True)
class SectionValue:
    """p_n(z) = exp(log_abs + i phase)."""

    log_abs: float
    phase: float
    precision_bits: int

    @property
    def log(self) -> complex:
        return complex(self.log_abs, self.phase)

    @property
    def value(self) -> complex:
        if self.log_abs > 709.0:
            raise RangeExceeded("section value overflows double precision; use .log")
        return cmath.exp(self.log)


def _wrap_phase(x: float) -> float:
    return math.remainder(x, 2 * math.pi)


def _ladder_logsum(logs, mp_logs, rtol, max_prec, what):
    """Sum exp(logs) with a certified relative error <= rtol, escalating precision.

    ``mp_logs()`` must build the same terms at the ambient mpmath precision.
    """
    log_s, cond = logsumexp_complex(logs)
    if log_s.real == -math.inf:
        return log_s, 53
    if rounding_bound(logs, cond) <= rtol:
        return log_s, 53
    for prec in LADDER[1:]:
        if prec > max_prec:
            break
        with mp.workprec(prec + 20):
            terms = mp_logs()
            s, c = mp_logsumexp(terms)
            scale = 1 + max(abs(t) for t in terms if t.real != -mp.inf)
            if c != mp.inf and float(c * scale) * 2.0 ** (-prec) <= rtol:
                return complex(s), prec
    raise PrecisionExhausted(f"{what}: cancellation not resolved at {max_prec} bits")


def section_value(model: EntireFunctionModel, n: int, z, rtol: float = 1e-10, max_prec: int = 512) -> SectionValue:
    """p_n(z) in split log form.

    Terms are assembled as log c_k + k log z and summed relative to the dominant term, so
    values near |z| ~ r_n, where individual terms reach exp(n/lam), neither overflow nor
    lose the small ones.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    z = complex(z)
    if z == 0 or n == 0:
        lc = complex(model.log_coefficients(0)[0])
        return SectionValue(lc.real, _wrap_phase(lc.imag), 53)
    k = np.arange(n + 1)
    logs = model.log_coefficients(n) + k * cmath.log(z)

    def mp_logs():
        lz = mp.log(mp.mpc(z))
        return [c + j * lz for j, c in enumerate(model.log_coefficients_mp(n))]

    s, bits = _ladder_logsum(logs, mp_logs, rtol, max_prec, f"p_{n}({z})")
    return SectionValue(s.real, _wrap_phase(s.imag), bits)


def section_tail(model: EntireFunctionModel, n: int, z, rtol: float = 1e-10, max_prec: int = 512) -> complex:
    """log of f(z) - p_{n-1}(z) = sum_{k >= n} c_k z^k, summed directly.

    Direct summation avoids the subtraction f - p_{n-1}, which cancels catastrophically
    where the section already approximates f well. The cutoff grows until the last term
    ratio is below 1/2 and the geometric bound on the remainder is below rtol.
    """
    z = complex(z)
    if n < 1:
        return model.log_evaluate(z)
    if z == 0:
        return complex(-math.inf, 0.0)
    lz = cmath.log(z)
    kmax = max(2 * n, n + 32)
    while True:
        lc = model.log_coefficients(kmax)
        logs = lc[n:] + np.arange(n, kmax + 1) * lz
        q = math.exp(float(logs[-1].real - logs[-2].real))
        if q < 0.5:
            log_bound = logs[-1].real + math.log(q / (1 - q))

            def mp_logs(kmax=kmax):
                lzm = mp.log(mp.mpc(z))
                cm = model.log_coefficients_mp(kmax)
                return [cm[j] + j * lzm for j in range(n, kmax + 1)]

            s, _ = _ladder_logsum(logs, mp_logs, rtol, max_prec, f"tail of order {n} at {z}")
            # judged against the certified sum, not a double sum that may have cancelled
            if log_bound - s.real <= math.log(rtol) - 3:
                return s
        kmax = int(kmax * 1.5)
        if kmax > 10**6:
            raise RangeExceeded("tail series cutoff exceeds 1e6 terms")


# --- window ratios ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingWindow:
    n: int
    w_grid: tuple
    r_n: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.w_grid) == 0:
            raise ValueError("w_grid must be nonempty")

    @classmethod
    def for_model(cls, model: EntireFunctionModel, n: int, w_grid) -> "ScalingWindow":
        return cls(int(n), tuple(complex(w) for w in w_grid), scaling_radius(n, model.profile.lam))

    def points(self) -> np.ndarray:
        w = np.asarray(self.w_grid, dtype=complex)
        return self.r_n * (1 + w / math.sqrt(self.n))


@dataclass(frozen=True)
class RatioSample:
    n: int
    w: complex
    ratio: complex
    target: complex
    abs_error: float

    def row(self):
        return [self.n, self.w.real, self.w.imag, self.ratio.real, self.ratio.imag,
                self.target.real, self.target.imag, self.abs_error]


RATIO_COLUMNS = ("n", "w_re", "w_im", "ratio_re", "ratio_im", "target_re", "target_im", "abs_error")
ZERO_COLUMNS = ("n", "re", "im", "residual")


def _sample(n, w, log_ratio, target) -> RatioSample:
    if log_ratio.real > 709.0:
        raise RangeExceeded(f"ratio overflows at n={n}, w={w}")
    ratio = cmath.exp(log_ratio)
    return RatioSample(n, complex(w), ratio, complex(target), abs(ratio - target))


def ratio_on_window(model: EntireFunctionModel, window: ScalingWindow, rtol: float = 1e-10,
                    max_prec: int = 512) -> list[RatioSample]:
    """p_{n-1}(r_n(1 + w/sqrt n)) / f(r_n(1 + w/sqrt n)) against 1/2 erfc(w sqrt(lam/2))."""
    lam = model.profile.lam
    n = window.n
    if any(w.real >= 0 for w in window.w_grid):
        warnings.warn("window points with Re w >= 0 lie outside the proven convergence region", stacklevel=2)
    out = []
    for w, z in zip(window.w_grid, window.points()):
        lf = model.log_evaluate(z)
        if lf.real == -math.inf:
            raise DomainError(f"f vanishes at the window point {z}")
        lp = section_value(model, n - 1, z, rtol, max_prec).log
        out.append(_sample(n, w, lp - lf, 0.5 * erfc(w * math.sqrt(lam / 2))))
    return out


def newman_rivlin_ratio(n: int, w, rtol: float = 1e-10, max_prec: int = 512) -> RatioSample:
    """p_n(n + w sqrt n) / exp(n + w sqrt n) against 1/2 erfc(w / sqrt 2), exponential sections."""
    w = complex(w)
    if w.imag < 0:
        warnings.warn("Im w < 0 lies outside the proven convergence region", stacklevel=2)
    z = n + w * math.sqrt(n)
    lp = section_value(ExpModel(), n, z, rtol, max_prec).log
    return _sample(n, w, lp - z, 0.5 * erfc(w / math.sqrt(2)))


def esv_ratio(lam: float, n: int, w, rtol: float = 1e-10, max_prec: int = 512) -> RatioSample:
    """p_n(r q) / (q^n E_{1/lam}(r)) against 1/2 exp(w^2) erfc(w).

    Here r = (n/lam)^(1/lam) exp(1/(2n)) and q = 1 + w sqrt(2/(lam n)); note the extra
    factor in r compared with the plain scaling radius.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    w = complex(w)
    model = ExpModel() if lam == 1 else MittagLefflerModel(lam)
    r = (n / lam) ** (1 / lam) * math.exp(1 / (2 * n))
    q = 1 + w * math.sqrt(2 / (lam * n))
    lp = section_value(model, n, r * q, rtol, max_prec).log
    lE = model.log_evaluate(r)
    target = 0.5 * erfcx(w)
    return _sample(n, w, lp - n * cmath.log(q) - lE, target)


# --- zero clouds -------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroCloud:
    n: int  # section degree
    scaling: str
    zeros: np.ndarray  # in the scaled variable y, p_n(scale * y) = 0
    residuals: np.ndarray
    precision_bits: int
    scale: float = 1.0
    radii: np.ndarray = field(default=None, repr=False)

    def rows(self):
        return [[self.n, z.real, z.imag, r] for z, r in zip(self.zeros, self.residuals)]


def _scale_for(model, n, scaling):
    if scaling == "by_n":
        return float(n)
    if scaling == "by_r_n":
        return scaling_radius(n, model.profile.lam)
    if scaling == "none":
        return 1.0
    raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")


def zero_cloud(model: EntireFunctionModel, n: int, scaling: str = "by_n", scale: float | None = None,
               max_prec: int = 512, rtol: float = 1e-12) -> ZeroCloud:
    """All zeros of y -> p_n(s y), with s fixed by ``scaling`` unless ``scale`` overrides it."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = _scale_for(model, n, scaling) if scale is None else float(scale)
    ls = math.log(s)

    def coeff_logs(prec):
        if prec == 53:
            return model.log_coefficients(n) + np.arange(n + 1) * ls
        lsm = mp.log(mp.mpf(s))
        return [c + k * lsm for k, c in enumerate(model.log_coefficients_mp(n))]

    L = model.log_coefficients(n)
    if not np.isfinite(L[n].real):
        raise DomainError(f"coefficient {n} vanishes; p_{n} has degree < {n}")
    res = polynomial_roots(coeff_logs, max_prec=max_prec, rtol=rtol)
    if np.any(res.residuals > 1e-8):
        raise CertificationError(f"zero residuals up to {res.residuals.max():.3g} exceed 1e-8 for n={n}")
    return ZeroCloud(n, scaling, res.roots, res.residuals, res.precision_bits, s, res.radii)


def window_cloud(model: EntireFunctionModel, n: int, max_prec: int = 512) -> ZeroCloud:
    """Zeros of p_{n-1}(r_n y): the section index and radius used in the window limit."""
    return zero_cloud(model, n - 1, "by_r_n", scale=scaling_radius(n, model.profile.lam), max_prec=max_prec)


def vieta_defect(model: EntireFunctionModel, cloud: ZeroCloud) -> float:
    """|log(c_n s^n prod(-y_i)) - log c_0| with the imaginary part reduced mod 2 pi."""
    L = model.log_coefficients(cloud.n)
    lhs = L[cloud.n] + cloud.n * math.log(cloud.scale) + np.sum(np.log(-cloud.zeros.astype(complex)))
    d = lhs - L[0]
    return abs(complex(d.real, _wrap_phase(d.imag)))


def conjugate_defect(cloud: ZeroCloud) -> float:
    """Largest distance from a zero to the nearest conjugate of a zero."""
    z = cloud.zeros
    return float(np.max(np.min(np.abs(z[:, None] - np.conj(z)[None, :]), axis=1)))


# --- experiments on zero clouds ------------------------------------------------------------


@dataclass(frozen=True)
class DiskCountReport:
    epsilon: float
    n_grid: tuple
    counts: tuple
    radii: tuple  # n^(-1/2 + eps), window coordinates
    nearest: tuple  # distance from 1 to the nearest scaled zero, per n

    @property
    def nondecreasing(self) -> bool:
        return all(a <= b for a, b in zip(self.counts, self.counts[1:]))


def disk_count(model: EntireFunctionModel, n_grid: Sequence[int], epsilon: float, clouds=None) -> DiskCountReport:
    """Zeros of p_{n-1} in |z - r_n| <= r_n n^(-1/2 + eps), counted as |y - 1| <= n^(-1/2 + eps)."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    counts, radii, nearest = [], [], []
    for n in n_grid:
        cloud = clouds[n] if clouds is not None else window_cloud(model, n)
        rho = n ** (-0.5 + epsilon)
        d = np.abs(cloud.zeros - 1)
        counts.append(int(np.sum(d <= rho)))
        radii.append(rho)
        nearest.append(float(d.min()))
    return DiskCountReport(epsilon, tuple(int(n) for n in n_grid), tuple(counts), tuple(radii), tuple(nearest))


def disk_count_argument_principle(model: EntireFunctionModel, n: int, epsilon: float) -> int:
    """Independent count: winding number of y -> p_{n-1}(r_n y) around |y - 1| = n^(-1/2 + eps)."""
    r = scaling_radius(n, model.profile.lam)
    rho = n ** (-0.5 + epsilon)
    return winding_number(path=circle(1.0, rho), arg=lambda y: section_value(model, n - 1, r * y).phase)


@dataclass(frozen=True)
class ParabolaReport:
    n_max: int
    zeros_checked: int
    min_slack: float  # min of y^2 - 4(x + 1) over zeros with x > -1
    argmin: tuple  # (n, zero)
    vieta_max: float
    conjugate_max: float
    clouds: tuple = field(repr=False, default=())


def parabola_slack(z) -> np.ndarray:
    """y^2 - 4(x + 1) where x > -1, +inf where x <= -1 (those points are exterior outright)."""
    z = np.asarray(z, dtype=complex)
    return np.where(z.real > -1, z.imag**2 - 4 * (z.real + 1), np.inf)


def parabola_freeness(n_max: int, n_min: int = 1) -> ParabolaReport:
    """Check that no zero of an exponential section lies in {y^2 <= 4(x+1), x > -1}."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    model = ExpModel()
    best, where, total = math.inf, None, 0
    vmax = cmax = 0.0
    clouds = []
    for n in range(n_min, n_max + 1):
        c = zero_cloud(model, n, "none")
        clouds.append(c)
        total += c.zeros.size
        vmax = max(vmax, vieta_defect(model, c))
        cmax = max(cmax, conjugate_defect(c))
        sl = parabola_slack(c.zeros)
        i = int(np.argmin(sl))
        if sl[i] < best:
            best, where = float(sl[i]), (n, complex(c.zeros[i]))
        if sl[i] <= 0:
            raise CertificationError(f"zero {c.zeros[i]} of p_{n} lies in the parabola: numerical failure")
    return ParabolaReport(n_max, total, best, where, vmax, cmax, tuple(clouds))


@dataclass(frozen=True)
class HurwitzMatch:
    erfc_zero: complex
    w_star: complex
    predicted: complex  # 1 + w*/sqrt n
    nearest_zero: complex
    distance: float
    within: bool


def hurwitz_realization(model: EntireFunctionModel, n: int, count: int = 3, cloud: ZeroCloud | None = None,
                        radius_factor: float = 3.0) -> list[HurwitzMatch]:
    """Match window zeros of p_{n-1}(r_n y) with 1 + w*/sqrt n, w* = zeta* sqrt(2/lam), zeta* an erfc zero."""
    lam = model.profile.lam
    cloud = window_cloud(model, n) if cloud is None else cloud
    tol = radius_factor / math.sqrt(n)
    out = []
    for zeta in erfc_zeros(count).zeros[: 2 * count]:
        w = zeta * math.sqrt(2 / lam)
        y = 1 + w / math.sqrt(n)
        d = np.abs(cloud.zeros - y)
        i = int(np.argmin(d))
        out.append(HurwitzMatch(zeta, w, y, complex(cloud.zeros[i]), float(d[i]), bool(d[i] <= tol)))
    return out


def polyline_distance(points, polyline) -> np.ndarray:
    """Euclidean distance from each point to a polyline (sequence of vertices)."""
    p = np.asarray(points, dtype=complex)[:, None]
    a = np.asarray(polyline, dtype=complex)[None, :-1]
    b = np.asarray(polyline, dtype=complex)[None, 1:]
    ab = b - a
    t = np.clip(((p - a) * np.conj(ab)).real / np.maximum(np.abs(ab) ** 2, 1e-300), 0.0, 1.0)
    return np.min(np.abs(p - (a + t * ab)), axis=1)


def limit_curve_distance(cloud: ZeroCloud, lam: float = 1.0, resolution: int = 4096) -> float:
    """Largest distance from a (by_n or by_r_n scaled) zero to the level curve Re phi = 0."""
    return float(np.max(polyline_distance(cloud.zeros, limit_curve(lam, resolution))))


# --- emitters ------------------------------------------------------------------------------


def write_ratio_csv(samples: Sequence[RatioSample], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(RATIO_COLUMNS)
        for s in samples:
            wr.writerow([repr(v) if isinstance(v, float) else v for v in s.row()])


def write_zero_csv(clouds: Sequence[ZeroCloud], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(ZERO_COLUMNS)
        for c in clouds:
            for row in c.rows():
                wr.writerow([repr(float(v)) if not isinstance(v, int) else v for v in row])


def cloud_to_dict(c: ZeroCloud) -> dict:
    return {
        "n": c.n, "scaling": c.scaling, "scale": c.scale, "precision_bits": c.precision_bits,
        "zeros": [[float(z.real), float(z.imag)] for z in c.zeros],
        "residuals": [float(r) for r in c.residuals],
    }


def samples_to_dict(samples: Sequence[RatioSample]) -> list:
    return [dict(zip(RATIO_COLUMNS, s.row())) for s in samples]


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
