"""Entire-function models with the growth profile z^a (log z)^b exp(z^lam) (1 + o(1))."""
from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy import special as sps

from .errors import ConfigError, DomainError
from .series import logsumexp_complex
from .special import _ml_log_tail, _ml_initial_cutoff  # shared tail machinery
from .special import log_erfc, log_mittag_leffler


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


@dataclass(frozen=True)
class GrowthProfile:
    a: complex = 0j
    b: complex = 0j
    lam: float = 1.0
    theta: float = math.pi / 3
    mu: float = 0.5
    # constant C in f ~ C z^a (log z)^b exp(z^lam); Mittag-Leffler has C = lam
    leading_constant: float = 1.0

    def __post_init__(self):
        if not (0 < self.lam < math.inf):
            raise ValueError(f"lambda must be in (0, inf), got {self.lam}")
        if not (0 < self.theta < min(math.pi, math.pi / self.lam)):
            raise ValueError(f"theta must be in (0, min(pi, pi/lambda)), got {self.theta}")
        if not self.mu < 1:
            raise ValueError(f"mu must be < 1, got {self.mu}")

    def to_dict(self):
        return {
            "a": [self.a.real, self.a.imag],
            "b": [self.b.real, self.b.imag],
            "lambda": self.lam,
            "theta": self.theta,
            "mu": self.mu,
            "leading_constant": self.leading_constant,
        }


def _zpow(z, lam):
    if lam == 1:
        return z
    if float(lam).is_integer():
        return z ** int(lam)
    return cmath.exp(lam * cmath.log(z))


def _expm1(x: complex) -> complex:
    return complex(math.expm1(x.real) * math.cos(x.imag) - 2 * math.sin(x.imag / 2) ** 2,
                   math.exp(x.real) * math.sin(x.imag))


@dataclass(frozen=True)
class EntireFunctionModel:
    """Base model. Subclasses supply log-coefficients and a direct log-evaluator."""

    name: str
    profile: GrowthProfile
    real_coefficients: bool = True
    # False for functions outside the single-growth-direction class (zero-cloud use only)
    satisfies_growth_model: bool = True

    # --- coefficients -------------------------------------------------------------------
    def log_coefficients(self, kmax: int) -> np.ndarray:
        raise NotImplementedError

    def log_coefficients_mp(self, kmax: int) -> list:
        """High-precision log-coefficients at the current mpmath precision."""
        raise NotImplementedError

    def coefficient(self, k: int) -> complex:
        return complex(np.exp(self.log_coefficients(k)[k]))

    def coefficient_log_ratio(self, k: int) -> complex:
        lc = self.log_coefficients(k + 1)
        d = lc[k + 1] - lc[k]
        return complex(d.real, math.remainder(d.imag, 2 * math.pi))

    # --- evaluation ---------------------------------------------------------------------
    def log_evaluate(self, z) -> complex:
        raise NotImplementedError

    def log_derivative(self, z) -> complex:
        raise NotImplementedError

    def log_evaluate_many(self, zs) -> np.ndarray:
        """Vectorized log_evaluate (elementwise loop unless a subclass has a closed form)."""
        zs = np.asarray(zs, dtype=complex)
        return np.array([self.log_evaluate(z) for z in zs.ravel()], dtype=complex).reshape(zs.shape)

    def evaluate(self, z) -> complex:
        return cmath.exp(self.log_evaluate(z))

    def derivative(self, z) -> complex:
        return cmath.exp(self.log_derivative(z))

    def derivative_ratio(self, z) -> complex:
        """f'(z) / f(z)."""
        return cmath.exp(self.log_derivative(z) - self.log_evaluate(z))

    def log_leading_form(self, z) -> complex:
        """log of C z^a (log z)^b exp(z^lam) with principal branches."""
        z = complex(z)
        p = self.profile
        lz = cmath.log(z)
        out = math.log(p.leading_constant) + p.a * lz + _zpow(z, p.lam)
        if p.b != 0:
            out += p.b * cmath.log(lz)
        return out


class ExpModel(EntireFunctionModel):
    def __init__(self, theta=math.pi / 3, mu=None):
        mu = math.cos(theta) * 1.01 if mu is None else mu
        super().__init__("exp", GrowthProfile(0j, 0j, 1.0, theta, mu))

    def log_coefficients(self, kmax):
        return -sps.gammaln(np.arange(kmax + 1) + 1.0).astype(complex)

    def log_coefficients_mp(self, kmax):
        return [mp.mpc(-mp.loggamma(k + 1)) for k in range(kmax + 1)]

    def coefficient_log_ratio(self, k):
        return complex(-math.log(k + 1))

    def log_evaluate(self, z):
        return complex(z)

    def log_derivative(self, z):
        return complex(z)

    def log_evaluate_many(self, zs):
        return np.asarray(zs, dtype=complex)


class MittagLefflerModel(EntireFunctionModel):
    def __init__(self, lam: float, theta=None, mu=None):
        theta = min(0.5 * min(math.pi, math.pi / lam), math.pi / 3) if theta is None else theta
        c = math.cos(lam * theta)
        mu = (c * 1.01 if c > 0 else 0.01) if mu is None else mu
        super().__init__(f"mittag_leffler({lam:g})", GrowthProfile(0j, 0j, float(lam), theta, mu, float(lam)))

    @property
    def lam(self):
        return self.profile.lam

    def log_coefficients(self, kmax):
        return -sps.gammaln(np.arange(kmax + 1) / self.lam + 1.0).astype(complex)

    def log_coefficients_mp(self, kmax):
        lam = mp.mpf(self.lam)
        return [mp.mpc(-mp.loggamma(k / lam + 1)) for k in range(kmax + 1)]

    def coefficient_log_ratio(self, k):
        lam = self.lam
        return complex(math.lgamma(k / lam + 1) - math.lgamma((k + 1) / lam + 1))

    def log_evaluate(self, z):
        if self.lam == 2:
            # E_{1/2}(z) = exp(z^2) erfc(-z); the series cancels badly off the positive axis
            z = complex(z)
            return z * z + log_erfc(-z)
        return log_mittag_leffler(z, self.lam)

    def log_derivative(self, z):
        # E'(z) = sum_{k>=1} k z^(k-1) / Gamma(k/lam + 1) = lam * sum_j z^j / Gamma((j+1)/lam)
        z = complex(z)
        lam = self.lam
        if lam == 2:
            # E' = 2 z E + 2 / sqrt(pi)
            le = self.log_evaluate(z)
            return le + cmath.log(2 * z + 2 / math.sqrt(math.pi) * cmath.exp(-le))
        if z == 0:
            return -math.lgamma(1 / lam + 1) + 0j
        absz = abs(z)
        kmax = _ml_initial_cutoff(absz, lam)
        lz = cmath.log(z)
        while True:
            j = np.arange(kmax)
            logs = j * lz - sps.gammaln((j + 1) / lam)
            log_s, _ = logsumexp_complex(logs)
            if _ml_log_tail(absz, lam, kmax) + 2 * math.log(kmax + 2) - log_s.real <= math.log(1e-13):
                return math.log(lam) + log_s
            kmax = int(kmax * 1.3) + 16


class TwoDirectionModel(EntireFunctionModel):
    """f(z) = integral_{-1}^{1} (1 - t) e^{zt} dt = (e^z - e^{-z}(1 + 2z)) / z^2.

    Grows maximally along both arg z = 0 and arg z = pi, so it lies outside the single
    growth-direction class; usable for zero-cloud experiments only.
    """

    _SERIES_RADIUS = 1.0

    def __init__(self):
        super().__init__(
            "section5_example",
            GrowthProfile(-2 + 0j, 0j, 1.0, math.pi / 3, 0.99),
            satisfies_growth_model=False,
        )

    def log_coefficients(self, kmax):
        k = np.arange(kmax + 1)
        even = math.log(2.0) - sps.gammaln(k + 2.0)
        odd = math.log(2.0) + np.log(k + 1.0) - sps.gammaln(k + 3.0) + 1j * math.pi
        return np.where(k % 2 == 0, even + 0j, odd)

    def log_coefficients_mp(self, kmax):
        out = []
        for k in range(kmax + 1):
            if k % 2 == 0:
                out.append(mp.mpc(mp.log(2) - mp.loggamma(k + 2)))
            else:
                out.append(mp.mpc(mp.log(2) + mp.log(k + 1) - mp.loggamma(k + 3), mp.pi))
        return out

    def _series(self, z, deriv=False):
        c = np.exp(self.log_coefficients(60))
        k = np.arange(61)
        if deriv:
            return complex(np.polyval((k[1:] * c[1:])[::-1], z))
        return complex(np.polyval(c[::-1], z))

    def log_evaluate(self, z):
        z = complex(z)
        if abs(z) < self._SERIES_RADIUS:
            return cmath.log(self._series(z))
        if z.real >= 0:
            inner = -_expm1(-2 * z) - 2 * z * cmath.exp(-2 * z)
            return z + cmath.log(inner) - 2 * cmath.log(z)
        inner = _expm1(2 * z) - 2 * z
        return -z + cmath.log(inner) - 2 * cmath.log(z)

    def log_derivative(self, z):
        z = complex(z)
        if abs(z) < self._SERIES_RADIUS:
            return cmath.log(self._series(z, deriv=True))
        # f' = g'/z^2 - 2 g/z^3, g = e^z - e^{-z}(1+2z), g' = e^z + e^{-z}(2z - 1)
        if z.real >= 0:
            lg = z + cmath.log(-_expm1(-2 * z) - 2 * z * cmath.exp(-2 * z))
            lgp = z + cmath.log(1 + cmath.exp(-2 * z) * (2 * z - 1))
        else:
            lg = -z + cmath.log(_expm1(2 * z) - 2 * z)
            lgp = -z + cmath.log(cmath.exp(2 * z) + 2 * z - 1)
        ratio = cmath.exp(lgp - lg) - 2 / z
        return lg - 2 * cmath.log(z) + cmath.log(ratio)


class TableModel(EntireFunctionModel):
    """Model given by a finite coefficient table; evaluation falls back to the truncated series."""

    def __init__(self, name, profile, coefficients, real_coefficients=None):
        coeffs = np.asarray([_as_complex(c) for c in coefficients], dtype=complex)
        if coeffs.size == 0 or not np.isfinite(coeffs[0]):
            raise ConfigError("coefficient table must be nonempty with finite coefficient(0)")
        if real_coefficients is None:
            real_coefficients = bool(np.all(coeffs.imag == 0))
        super().__init__(name, profile, real_coefficients=real_coefficients)
        object.__setattr__(self, "_coeffs", coeffs)

    @property
    def table_size(self):
        return self._coeffs.size

    def _check(self, kmax):
        if kmax >= self._coeffs.size:
            raise DomainError(f"model {self.name!r} only tabulates {self._coeffs.size} coefficients")

    def log_coefficients(self, kmax):
        self._check(kmax)
        with np.errstate(divide="ignore"):
            return np.log(self._coeffs[: kmax + 1])

    def log_coefficients_mp(self, kmax):
        self._check(kmax)
        return [mp.log(mp.mpc(c)) if c != 0 else mp.mpc(-mp.inf) for c in self._coeffs[: kmax + 1]]

    def log_evaluate(self, z):
        z = complex(z)
        k = np.arange(self._coeffs.size)
        with np.errstate(divide="ignore"):
            logs = np.log(self._coeffs) + k * cmath.log(z) if z != 0 else np.log(self._coeffs[:1])
        return logsumexp_complex(logs)[0]

    def log_derivative(self, z):
        z = complex(z)
        k = np.arange(1, self._coeffs.size)
        with np.errstate(divide="ignore"):
            logs = np.log(k * self._coeffs[1:]) + (k - 1) * cmath.log(z) if z != 0 else np.log(self._coeffs[1:2])
        return logsumexp_complex(logs)[0]


_ML_NAME = re.compile(r"^(?:mittag_leffler|ml)(?:\((?P<lam>[0-9.eE+-]+)\))?$")


def builtin_model(name: str, lam: float | None = None) -> EntireFunctionModel:
    """Built-in models: ``exp``, ``mittag_leffler(lam)`` (alias ``ml``), ``section5_example``."""
    key = name.strip().lower()
    if key == "exp":
        return ExpModel()
    m = _ML_NAME.match(key)
    if m:
        if m.group("lam") is not None:
            lam = float(m.group("lam"))
        if lam is None:
            raise ValueError("mittag_leffler model needs lambda")
        return MittagLefflerModel(float(lam))
    if key in ("section5_example", "section5"):
        return TwoDirectionModel()
    raise ValueError(f"unknown model {name!r}")


def load_model(path) -> TableModel:
    """Load a custom model from a JSON descriptor::

        {"name": "...", "profile": {"a": [re, im], "b": [re, im], "lambda": 1,
         "theta": 1.0, "mu": 0.5, "leading_constant": 1}, "coefficients": [c0, [re, im], ...]}
    """
    data = json.loads(Path(path).read_text())
    try:
        p = data["profile"]
        profile = GrowthProfile(
            _as_complex(p.get("a", 0)), _as_complex(p.get("b", 0)), float(p["lambda"]),
            float(p["theta"]), float(p["mu"]), float(p.get("leading_constant", 1.0)),
        )
        return TableModel(data.get("name", Path(path).stem), profile, data["coefficients"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model descriptor {path}: {exc}") from exc


# --- deviation and growth diagnostics ---------------------------------------------------


@dataclass(frozen=True)
class DeviationSample:
    z: complex
    delta: complex
    modulus: float


def _check_sector(model, z):
    z = complex(z)
    if z == 0:
        raise DomainError("z must be nonzero")
    if abs(cmath.phase(z)) > model.profile.theta + 1e-15:
        raise DomainError(f"arg z = {cmath.phase(z):.4g} outside the growth sector |arg z| <= {model.profile.theta:.4g}")
    if model.profile.b != 0 and abs(z) <= 1:
        raise DomainError("(log z)^b needs |z| > 1 under the principal-branch convention")
    return z


def deviation(model: EntireFunctionModel, z) -> DeviationSample:
    """delta(z) = f(z) / (C z^a (log z)^b exp(z^lam)) - 1, formed in log space."""
    z = _check_sector(model, z)
    x = model.log_evaluate(z) - model.log_leading_form(z)
    x = complex(x.real, math.remainder(x.imag, 2 * math.pi))
    d = _expm1(x)
    return DeviationSample(z, d, abs(d))


def delta_tilde(model: EntireFunctionModel, r_n: float, t) -> complex:
    """(1 + log t / log r_n)^b (1 + delta(r_n t)) - 1."""
    t = complex(t)
    d = deviation(model, r_n * t).delta
    b = model.profile.b
    fac = 1.0 if b == 0 else cmath.exp(b * cmath.log(1 + cmath.log(t) / math.log(r_n)))
    return fac * (1 + d) - 1


@dataclass(frozen=True)
class DerivativeGrowthReport:
    nu: float
    n_grid: tuple
    values: tuple  # max_z |f'(r_n z) / f(r_n z)| * exp(-nu n), one per n
    bounded: bool
    sigma_re_phi: float


def check_derivative_growth(model, n_grid, z_grid, nu: float, sigma_re_phi: float | None = None):
    """Numerical evidence for f'(r_n z)/f(r_n z) = O(exp(nu n)) on a sector grid."""
    n_grid = tuple(int(n) for n in n_grid)
    z_grid = tuple(complex(z) for z in z_grid)
    if len(n_grid) < 2 or len(z_grid) < 1 or any(n < 1 for n in n_grid) or list(n_grid) != sorted(set(n_grid)):
        raise ValueError("need at least two strictly increasing positive n and one z")
    for z in z_grid:
        _check_sector(model, z)
    if sigma_re_phi is None:
        from .saddle import sigma_points

        sigma_re_phi = sigma_points(model.profile.lam, model.profile.theta).re_phi
    if not 0 < nu < -sigma_re_phi:
        raise ValueError(f"nu must lie in (0, {-sigma_re_phi:.4g})")
    lam = model.profile.lam
    values = []
    for n in n_grid:
        r = (n / lam) ** (1 / lam)
        m = max(abs(model.derivative_ratio(r * z)) for z in z_grid)
        values.append(m * math.exp(-nu * n))
    # bounded: the sequence never climbs above its first value by more than a modest factor
    bounded = max(values) <= 10.0 * values[0] and values[-1] <= values[0] * (1 + 1e-9)
    return DerivativeGrowthReport(nu, n_grid, tuple(values), bool(bounded), float(sigma_re_phi))
