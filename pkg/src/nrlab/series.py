"""Overflow-safe summation of complex series whose terms are given as logarithms."""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np

EPS = np.finfo(float).eps


def logsumexp_complex(log_terms):
    """Sum ``exp(log_terms)`` without overflow.

    Returns ``(log_sum, cond)`` where ``cond = sum|t_k| / |sum t_k|`` measures cancellation.
    The scaled terms are added with ``math.fsum`` so the only rounding is in forming them.
    """
    lt = np.asarray(log_terms, dtype=complex)
    finite = np.isfinite(lt.real)
    if not finite.any():
        return complex(-math.inf, 0.0), 1.0
    lt = lt[finite]
    m = lt.real.max()
    t = np.exp(lt - m)
    s = complex(math.fsum(t.real), math.fsum(t.imag))
    mag = math.fsum(np.abs(t))
    if s == 0:
        return complex(-math.inf, 0.0), math.inf
    return m + complex(math.log(abs(s)), math.atan2(s.imag, s.real)), mag / abs(s)


def rounding_bound(log_terms, cond):
    """Relative error estimate for ``logsumexp_complex``: each scaled term carries an
    exponent error proportional to the size of its logarithm."""
    lt = np.asarray(log_terms, dtype=complex)
    lt = lt[np.isfinite(lt.real)]
    scale = 1.0 + (np.abs(lt).max() if lt.size else 0.0)
    return 4 * EPS * scale * cond


def mp_logsumexp(log_terms):
    """mpmath counterpart of ``logsumexp_complex`` at the current mp precision."""
    terms = [t for t in log_terms if t.real != -mp.inf]
    if not terms:
        return mp.mpc(-mp.inf), mp.mpf(1)
    m = max(t.real for t in terms)
    s = mp.mpc(0)
    mag = mp.mpf(0)
    for t in terms:
        e = mp.exp(t - m)
        s += e
        mag += abs(e)
    if s == 0:
        return mp.mpc(-mp.inf), mp.inf
    return m + mp.log(s), mag / abs(s)
