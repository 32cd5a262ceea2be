"""Fast invariant checks run by ``nrlab selftest``.

Each check returns (ok, detail). The erfc used by the erfc checks is looked up on the
``special`` module at call time, so a fault can be injected by swapping that attribute.
"""
from __future__ import annotations

import cmath
import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import special
from .models import builtin_model
from .rh import F_n, F_n_closed, contour_for
from .saddle import build_chart, phi
from .sections import conjugate_defect, vieta_defect, zero_cloud

_ERFC_POINTS = (0.3, 1.7, 4.2, 0.5 + 0.5j, 2 - 3j, -0.8 + 1.1j, 6 + 2j)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def check_erfc_reflection():
    worst = max(abs(special.erfc(-z) + special.erfc(z) - 2) for z in _ERFC_POINTS)
    return worst <= 1e-13, f"max |erfc(-z) + erfc(z) - 2| = {worst:.3g}"


def check_erfc_conjugation():
    worst = max(abs(special.erfc(complex(z).conjugate()) - special.erfc(z).conjugate()) for z in _ERFC_POINTS)
    return worst <= 1e-14, f"max conjugation defect = {worst:.3g}"


def check_erfc_zero():
    v = special.erfc(0)
    return v == 1, f"erfc(0) = {v}"


def check_h_jump():
    worst = 0.0
    for x in (-2.0, -0.4, 0.0, 0.9, 3.0):
        up = special.gaussian_cauchy_h(complex(x, 1e-300))
        down = special.gaussian_cauchy_h(complex(x, -1e-300))
        worst = max(worst, abs(up - down - math.exp(-x * x)))
    return worst <= 1e-14, f"max |h+ - h- - exp(-x^2)| = {worst:.3g}"


def check_ml_lambda_one():
    pts = (0.5, -3.0, 2 + 1j, 10j, -4 - 2j, 25.0)
    worst = max(abs(special.mittag_leffler(z, 1.0) / cmath.exp(z) - 1) for z in pts)
    return worst <= 1e-12, f"max |E_1(z) e^-z - 1| = {worst:.3g}"


def check_chart_round_trip():
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        ch = build_chart(lam)
        xi = 0.8 * ch.radius_V * np.exp(2j * np.pi * np.arange(24) / 24)
        z = ch.psi_forward(xi)
        worst = max(worst, float(np.max(np.abs(ch.psi_inverse(z) - xi))),
                    float(np.max(np.abs(phi(z, lam) - xi * xi))))
    return worst <= 1e-12, f"max round-trip defect = {worst:.3g}"


def check_phi_saddle():
    worst = 0.0
    h = 1e-3
    for lam in (0.5, 1.0, 2.0, 3.0):
        f = lambda t: phi(1 + t, lam).real
        # fourth-order central stencils
        d1 = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
        d2 = (-f(2 * h) + 16 * f(h) - 30 * f(0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)
        worst = max(worst, abs(phi(1.0, lam)), abs(d1), abs(d2 - lam))
    return worst <= 1e-8, f"max of |phi(1)|, |phi'(1)|, |phi''(1) - lam| = {worst:.3g}"


def check_window_limit_trend():
    lam, w = 1.0, -1 + 0.5j
    errs = [abs(n * phi(1 + w / math.sqrt(n), lam) - lam * w * w / 2) for n in (1e2, 1e4, 1e6)]
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 1e-3
    return ok, "errors " + ", ".join(f"{e:.3g}" for e in errs)


def check_small_clouds():
    m = builtin_model("exp")
    c2 = zero_cloud(m, 2, "none").zeros
    two = max(min(abs(c2 - r)) for r in (-1 + 1j, -1 - 1j))
    c20 = zero_cloud(m, 20, "by_n")
    v, cj = vieta_defect(m, c20), conjugate_defect(c20)
    return two <= 1e-14 and v <= 1e-8 and cj <= 1e-10, f"n=2 defect {two:.3g}, n=20 Vieta {v:.3g}, conjugate {cj:.3g}"


def check_fn_identity():
    m = builtin_model("exp")
    c = contour_for(m)
    worst = 0.0
    for z in (0.4, 0.7 + 0.3j, 1.5, -1.4 + 0.2j):
        closed = F_n_closed(m, 20, z, c.contains(z))
        worst = max(worst, abs(F_n(m, c, 20, z).value - closed) / abs(closed))
    return worst <= 1e-6, f"n=20 F_n quadrature vs closed form, max rel {worst:.3g}"


CHECKS = (
    ("erfc_zero", check_erfc_zero),
    ("erfc_reflection", check_erfc_reflection),
    ("erfc_conjugation", check_erfc_conjugation),
    ("h_jump", check_h_jump),
    ("ml_lambda1_is_exp", check_ml_lambda_one),
    ("chart_round_trip", check_chart_round_trip),
    ("phi_saddle_data", check_phi_saddle),
    ("n_phi_window_limit", check_window_limit_trend),
    ("small_zero_clouds", check_small_clouds),
    ("fn_identity_n20", check_fn_identity),
)


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


@contextmanager
def injected_fault(kind: str):
    """Temporarily corrupt a special function (used to test that the suite notices)."""
    if kind != "erfc":
        raise ValueError(f"unknown fault {kind!r}")
    orig = special.erfc

    def broken(z):
        z = complex(z)
        # left half-plane values drift off the reflection identity
        return orig(z) * (1 + 1e-6) if z.real < 0 else orig(z)

    special.erfc = broken
    try:
        yield
    finally:
        special.erfc = orig
