import cmath
import csv
import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrlab.errors import CertificationError
from nrlab.models import builtin_model
from nrlab.sections import (
    RATIO_COLUMNS,
    ScalingWindow,
    conjugate_defect,
    disk_count,
    disk_count_argument_principle,
    esv_ratio,
    limit_curve_distance,
    newman_rivlin_ratio,
    parabola_freeness,
    parabola_slack,
    ratio_on_window,
    section_tail,
    section_value,
    vieta_defect,
    write_ratio_csv,
    write_zero_csv,
    zero_cloud,
)
from nrlab.special import erfc

GOLD = json.loads((Path(__file__).parent / "fixtures" / "golden.json").read_text())
EXP = builtin_model("exp")


def test_section_small_exact():
    assert section_value(EXP, 2, 1).value == pytest.approx(2.5, rel=1e-15)


@pytest.mark.parametrize("name", ["exp", "mittag_leffler(2)", "section5_example"])
def test_section_degree_zero(name):
    m = builtin_model(name)
    c0 = cmath.exp(m.log_coefficients(0)[0])
    assert section_value(m, 0, 3.7 + 1j).value == pytest.approx(c0, rel=1e-15)


def test_section_exp_50_golden():
    g = GOLD["section_exp_n50_z50"]
    v = section_value(EXP, 50, 50)
    assert abs(v.log_abs - g["log_abs"]) <= 1e-10
    assert abs(v.phase - g["phase"]) <= 1e-10


def test_section_escalates_under_cancellation():
    # p_60(-30): terms near e^30 cancel down to e^-30
    v = section_value(EXP, 60, -30)
    with mp.workdps(80):
        ref = mp.fsum(mp.mpf(-30) ** k / mp.factorial(k) for k in range(61))
    assert v.precision_bits > 53
    assert abs(v.value - float(ref)) <= 1e-10 * abs(float(ref))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.floats(0.1, 40), st.floats(-math.pi, math.pi))
def test_section_plus_tail_is_f(n, r, t):
    z = cmath.rect(r, t)
    head = section_value(EXP, n - 1, z).log
    tail = section_tail(EXP, n, z)
    # p_{n-1} + tail = e^z, compared after dividing by the larger piece
    big = max(head.real, tail.real)
    s = cmath.exp(head - big) + cmath.exp(tail - big)
    assert abs(s - cmath.exp(z - big)) <= 1e-9 * max(1.0, abs(cmath.exp(z - big)))


# --- ratios -------------------------------------------------------------------------------


def test_window_consistency():
    n, w = 64, -0.7 + 0.4j
    win = ScalingWindow.for_model(EXP, n, [w])
    s = ratio_on_window(EXP, win)[0]
    z = win.points()[0]
    manual = cmath.exp(section_value(EXP, n - 1, z).log - EXP.log_evaluate(z))
    assert abs(s.ratio - manual) <= 1e-12
    assert s.abs_error == abs(s.ratio - s.target)
    assert win.r_n == 64


def test_window_rejects_empty():
    with pytest.raises(ValueError):
        ScalingWindow(4, (), 4.0)


def test_window_warns_on_right_half():
    win = ScalingWindow.for_model(EXP, 16, [0.0])
    with pytest.warns(UserWarning):
        s = ratio_on_window(EXP, win)[0]
    assert s.target == 0.5


@pytest.mark.parametrize("w", [-1.0, -0.5 + 0.5j])
def test_window_error_decay(w):
    errs = [ratio_on_window(EXP, ScalingWindow.for_model(EXP, n, [w]))[0].abs_error for n in (64, 256, 1024)]
    assert errs[1] / errs[0] <= 0.75 and errs[2] / errs[1] <= 0.75


def test_window_n1024_golden():
    g = GOLD["window_exp_n1024_wm1p1i"]
    s = ratio_on_window(EXP, ScalingWindow.for_model(EXP, 1024, [-1 + 1j]))[0]
    assert abs(s.ratio - complex(*g["ratio"])) <= 1e-10
    assert s.abs_error <= g["abs_error"] * (1 + 1e-8)


def test_window_ml2_decay():
    m = builtin_model("mittag_leffler(2)")
    errs = [ratio_on_window(m, ScalingWindow.for_model(m, n, [-1.0]))[0].abs_error for n in (64, 256)]
    assert errs[1] < errs[0]


def test_newman_rivlin_targets():
    s = newman_rivlin_ratio(100, 0)
    assert s.target == 0.5
    a = newman_rivlin_ratio(100, 1j).abs_error
    b = newman_rivlin_ratio(400, 1j).abs_error
    assert b < a
    assert newman_rivlin_ratio(400, 1j).target == pytest.approx(0.5 * erfc(1j / math.sqrt(2)))


def test_newman_rivlin_golden():
    s = newman_rivlin_ratio(100, 2j)
    assert abs(s.ratio - complex(*GOLD["newman_rivlin_n100_w2i"])) <= 1e-10 * abs(s.ratio)


def test_esv():
    assert esv_ratio(1.0, 64, 0).target == 0.5
    assert esv_ratio(1.0, 256, -0.5).abs_error < esv_ratio(1.0, 64, -0.5).abs_error
    s = esv_ratio(2.0, 128, -1)
    assert abs(s.ratio - complex(*GOLD["esv_ml2_n128_wm1"])) <= 1e-9 * abs(s.ratio)
    with pytest.raises(ValueError):
        esv_ratio(0.0, 8, 0)


def test_ratio_csv(tmp_path):
    samples = ratio_on_window(EXP, ScalingWindow.for_model(EXP, 16, [-1, -1 + 1j]))
    p = tmp_path / "r.csv"
    write_ratio_csv(samples, p)
    rows = list(csv.reader(p.open()))
    assert tuple(rows[0]) == RATIO_COLUMNS
    assert float(rows[2][-1]) == samples[1].abs_error


# --- zero clouds --------------------------------------------------------------------------


def test_zeros_small_cases():
    assert np.allclose(zero_cloud(EXP, 1, "none").zeros, [-1])
    z = zero_cloud(EXP, 2, "none").zeros
    z = z[np.argsort(z.imag)]
    assert np.allclose(z, [-1 - 1j, -1 + 1j], atol=1e-14)


@pytest.mark.parametrize("name,n", [("exp", 30), ("mittag_leffler(2)", 25), ("section5_example", 20)])
def test_cloud_invariants(name, n):
    m = builtin_model(name)
    c = zero_cloud(m, n, "by_r_n")
    assert c.zeros.size == n
    assert np.all(c.residuals <= 1e-8)
    assert vieta_defect(m, c) <= 1e-8
    assert conjugate_defect(c) <= 1e-10


def test_zero_csv(tmp_path):
    p = tmp_path / "z.csv"
    write_zero_csv([zero_cloud(EXP, 3, "none")], p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["n", "re", "im", "residual"] and len(rows) == 4


def test_szego_distance_shrinks():
    d30 = limit_curve_distance(zero_cloud(EXP, 30, "by_n"))
    d60 = limit_curve_distance(zero_cloud(EXP, 60, "by_n"))
    assert d30 <= 0.2 and d60 < d30
    assert d30 == pytest.approx(GOLD["szego_max_distance_n30"], abs=1e-6)
    assert d60 == pytest.approx(GOLD["szego_max_distance_n60"], abs=1e-6)


def test_parabola():
    rep = parabola_freeness(12)
    assert rep.zeros_checked == 78 and rep.min_slack > 0
    assert parabola_slack([-1 + 0j])[0] == np.inf
    six = parabola_freeness(6, n_min=6)
    assert six.min_slack == pytest.approx(GOLD["parabola_n6_min_slack"], rel=1e-10)


def test_parabola_rejects_zero_n():
    with pytest.raises(ValueError):
        parabola_freeness(0)


def test_disk_count_consistency():
    c = zero_cloud(EXP, 99, "by_r_n", scale=100.0)
    rep = disk_count(EXP, [100], 0.1, clouds={100: c})
    g = GOLD["disk_exp_n100_eps0.1"]
    assert rep.counts[0] == g["count"] == disk_count_argument_principle(EXP, 100, 0.1)
    assert rep.nearest[0] == pytest.approx(g["nearest"], abs=1e-10)
    bigger = disk_count(EXP, [100], 0.49, clouds={100: c})
    assert bigger.counts[0] >= rep.counts[0]
    with pytest.raises(ValueError):
        disk_count(EXP, [100], 0.5, clouds={100: c})


def test_certification_error_is_numeric():
    assert issubclass(CertificationError, RuntimeError)
