"""Argument-principle zero counting along closed parametrized paths."""
from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import CertificationError

_MAX_STEP = math.pi / 3


def _wrap(d):
    return (d + math.pi) % (2 * math.pi) - math.pi


def phase_change(arg, path, t0=0.0, t1=1.0, n0=64, max_depth=40):
    """Total continuous change of ``arg(path(t))`` over ``[t0, t1]``.

    ``arg`` maps a point to the phase of the function (any branch). Intervals are bisected
    until every increment is below pi/3 and consistent with its midpoint split.
    """
    ts = np.linspace(t0, t1, n0 + 1)
    ph = [arg(path(t)) for t in ts]
    total = 0.0
    stack = [(ts[i], ts[i + 1], ph[i], ph[i + 1], 0) for i in range(n0)][::-1]
    while stack:
        a, b, pa, pb, depth = stack.pop()
        m = 0.5 * (a + b)
        pm = arg(path(m))
        d1 = _wrap(pm - pa)
        d2 = _wrap(pb - pm)
        if abs(d1) < _MAX_STEP and abs(d2) < _MAX_STEP and abs(_wrap(pb - pa) - d1 - d2) < 1e-9:
            total += d1 + d2
            continue
        if depth >= max_depth:
            raise CertificationError(f"phase tracking failed near t={m:.6g}; zero on or near the path?")
        stack.append((m, b, pm, pb, depth + 1))
        stack.append((a, m, pa, pm, depth + 1))
    return total


def winding_number(f=None, path=None, *, arg=None, n0=64, tol=1e-6):
    """Integer winding number of ``f`` (or of a phase function ``arg``) around the closed
    path ``path: [0, 1] -> C``."""
    if arg is None:
        def arg(z):
            v = f(z)
            if v == 0 or not cmath.isfinite(v):
                raise CertificationError(f"function vanishes or overflows on the path at {z}")
            return cmath.phase(v)
    w = phase_change(arg, path, 0.0, 1.0, n0=n0) / (2 * math.pi)
    k = round(w)
    if abs(w - k) > tol:
        raise CertificationError(f"winding number {w} is not close to an integer")
    return int(k)


def circle(center, radius):
    c = complex(center)
    return lambda t: c + radius * cmath.exp(2j * math.pi * t)


def rectangle(x0, x1, y0, y1):
    """Counterclockwise boundary of ``[x0, x1] x [y0, y1]`` as a path on [0, 1]."""
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]

    def path(t):
        s = 4.0 * t
        i = min(int(s), 3)
        return corners[i] + (s - i) * (corners[i + 1] - corners[i])

    return path
