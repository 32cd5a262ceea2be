"""Freeze golden values from an independent mpmath oracle into tests/fixtures/golden.json.

Nothing here imports nrlab: every value is recomputed from first principles (plain big-float
sums, mpmath.polyroots, mpmath.erfc, mpmath.findroot) so the tests compare two routes.

    python scripts/make_fixtures.py [--out tests/fixtures/golden.json]
"""
from __future__ import annotations

import argparse
import json
import math
import time
from pathlib import Path

import mpmath as mp


def section(coeffs, z):
    return mp.fsum(c * z**k for k, c in enumerate(coeffs))


def exp_coeffs(n):
    return [1 / mp.factorial(k) for k in range(n + 1)]


def ml_coeffs(n, lam):
    return [1 / mp.gamma(mp.mpf(k) / lam + 1) for k in range(n + 1)]


def two_direction_coeffs(n):
    # g(z) = e^z - e^{-z}(1 + 2z); f = g / z^2, so c_k is the z^{k+2} coefficient of g
    out = []
    for k in range(n + 1):
        m = k + 2
        g = (1 - (-1) ** m) / mp.factorial(m) - 2 * (-1) ** (m - 1) / mp.factorial(m - 1)
        out.append(g)
    return out


def roots(coeffs, dps):
    with mp.workdps(dps):
        r = mp.polyroots(coeffs[::-1], maxsteps=2000, extraprec=4 * dps)
    return [complex(v) for v in r]


def szego_polyline(m=4000):
    """Vertices of |z e^{1-z}| = 1, Re z <= 1, by a polar bisection per angle."""
    pts = []
    for j in range(m + 1):
        t = mp.pi * j / m
        if j == 0:
            pts.append(1 + 0j)
            continue
        g = lambda r: mp.log(r) + 1 - r * mp.cos(t)
        rho = mp.findroot(g, (mp.mpf("1e-6"), mp.mpf(1) - mp.mpf("1e-30")), solver="anderson")
        pts.append(complex(rho * mp.exp(1j * t)))
    lower = [p.conjugate() for p in pts[-2:0:-1]]
    return pts + lower + [pts[0]]


def seg_distance(p, poly):
    best = math.inf
    for a, b in zip(poly, poly[1:]):
        ab = b - a
        t = ((p - a) * ab.conjugate()).real / max(abs(ab) ** 2, 1e-300)
        t = min(1.0, max(0.0, t))
        best = min(best, abs(p - (a + t * ab)))
    return best


def erfc_first_zero():
    """Argument-principle count on [-4,0]x[0,4], then Newton from the box centre of mass."""
    with mp.workdps(30):
        corners = [mp.mpc(-4, 0), mp.mpc(0, 0), mp.mpc(0, 4), mp.mpc(-4, 4), mp.mpc(-4, 0)]
        m = 400
        total = mp.mpf(0)
        prev = mp.arg(mp.erfc(corners[0]))
        for a, b in zip(corners, corners[1:]):
            for j in range(1, m + 1):
                cur = mp.arg(mp.erfc(a + (b - a) * j / m))
                d = cur - prev
                d -= 2 * mp.pi * mp.nint(d / (2 * mp.pi))
                total += d
                prev = cur
        count = int(mp.nint(total / (2 * mp.pi)))
        # first moment of the zero inside the box fixes the Newton start
        z0 = mp.mpc(-1.3, 2.0)
        z = mp.findroot(mp.erfc, z0)
    return count, complex(z)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "golden.json"))
    args = ap.parse_args(argv)
    gold = {"schema": 1, "generator": "scripts/make_fixtures.py", "mpmath": mp.__version__}
    t0 = time.time()

    with mp.workprec(512):
        v = section(exp_coeffs(50), mp.mpf(50))
        gold["section_exp_n50_z50"] = {"log_abs": float(mp.log(abs(v))), "phase": float(mp.arg(v))}

        z = 100 + 2j * 10
        v = section(exp_coeffs(100), mp.mpc(z)) / mp.exp(mp.mpc(z))
        gold["newman_rivlin_n100_w2i"] = [float(v.real), float(v.imag)]

    with mp.workprec(256):
        lam, n, w = 2, 128, -1
        r = mp.sqrt(mp.mpf(n) / lam) * mp.exp(mp.mpf(1) / (2 * n))
        q = 1 + w * mp.sqrt(mp.mpf(2) / (lam * n))
        E = mp.fsum(r**k / mp.gamma(mp.mpf(k) / lam + 1) for k in range(4000))
        v = section(ml_coeffs(n, lam), r * q) / (q**n * E)
        gold["esv_ml2_n128_wm1"] = [float(v.real), float(v.imag)]

    with mp.workprec(113):
        # quadruple precision: window ratio for exp at n = 1024, w = -1 + i
        n, w = 1024, mp.mpc(-1, 1)
        z = n * (1 + w / mp.sqrt(n))
        v = section(exp_coeffs(n - 1), z) / mp.exp(z)
        target = mp.erfc(w * mp.sqrt(mp.mpf(1) / 2)) / 2
        gold["window_exp_n1024_wm1p1i"] = {"ratio": [float(v.real), float(v.imag)], "abs_error": float(abs(v - target))}

    # Saff-Varga slack at n = 6
    zs = roots(exp_coeffs(6), 60)
    slack = min(z.imag**2 - 4 * (z.real + 1) for z in zs if z.real > -1)
    gold["parabola_n6_min_slack"] = slack

    # Szego distances of by_n scaled zeros
    poly = szego_polyline()
    for n in (30, 60):
        zs = roots([c * mp.mpf(n) ** k for k, c in enumerate(exp_coeffs(n))], 120)
        gold[f"szego_max_distance_n{n}"] = max(seg_distance(z, poly) for z in zs)

    # two-direction example at n = 80, scaled by n
    zs = roots([c * mp.mpf(80) ** k for k, c in enumerate(two_direction_coeffs(80))], 160)
    near = sorted(abs(math.atan2((z - 1).imag, (z - 1).real)) for z in zs if abs(z - 1) <= 0.5)
    k = len(near)
    med = near[k // 2] if k % 2 else 0.5 * (near[k // 2 - 1] + near[k // 2])
    gold["sector_example_n80"] = {"near_count": k, "median_abs_arg": med}

    # exp disk count at n = 100, eps = 0.1 (zeros of p_99(r_100 y))
    zs = roots([c * mp.mpf(100) ** k for k, c in enumerate(exp_coeffs(99))], 160)
    rho = 100 ** (-0.5 + 0.1)
    gold["disk_exp_n100_eps0.1"] = {"count": sum(abs(z - 1) <= rho for z in zs),
                                    "nearest": min(abs(z - 1) for z in zs)}

    count, z1 = erfc_first_zero()
    gold["erfc_first_zero"] = {"box_count": count, "zero": [z1.real, z1.imag]}

    gold["elapsed_seconds"] = round(time.time() - t0, 1)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(gold, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out} in {gold['elapsed_seconds']} s")


if __name__ == "__main__":
    main()
