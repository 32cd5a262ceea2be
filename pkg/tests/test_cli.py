import csv
import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrlab.cli import main
from nrlab.config import ExperimentConfig, RunManifest, parse_complex, parse_int_grid, parse_rect
from nrlab.errors import ConfigError

GOLD = json.loads((Path(__file__).parent / "fixtures" / "golden.json").read_text())


def _rows(path):
    return list(csv.DictReader(open(path)))


# --- parsing and config ------------------------------------------------------------------------


@pytest.mark.parametrize("text,value", [("-1", -1), ("2i", 2j), ("i", 1j), ("-1+0.5i", -1 + 0.5j), ("1-2j", 1 - 2j)])
def test_parse_complex(text, value):
    assert parse_complex(text) == value


def test_parse_grids():
    assert parse_int_grid("1..4,10") == (1, 2, 3, 4, 10)
    assert parse_rect("-2:-0.1:-1:1") == (-2, -0.1, -1, 1)
    with pytest.raises(ConfigError):
        parse_rect("1:0:0:1")
    with pytest.raises(ConfigError):
        parse_complex("abc")


@settings(max_examples=40)
@given(
    st.lists(st.integers(1, 5000), min_size=1, max_size=6),
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), max_size=4),
    st.sampled_from([53, 106, 256, 512]),
    st.floats(1e-14, 1e-3),
    st.sampled_from(["csv", "json"]),
)
def test_config_round_trip(ns, ws, prec, rtol, fmt):
    cfg = ExperimentConfig(model="ml", lam=2.0, n_grid=ns, w_points=ws, max_prec=prec, rtol=rtol, fmt=fmt,
                           w_rect=(-2, -0.1, -1, 1), overlay=("parabola",))
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(n_grid=()).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(rtol=0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(max_prec=128).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_w_grid_rectangle():
    g = ExperimentConfig(w_rect=(-2, -0.1, -1, 1), w_resolution=21).w_grid()
    assert len(g) == 441
    assert min(w.real for w in g) == -2 and max(w.imag for w in g) == 1


# --- commands -----------------------------------------------------------------------------


def test_ratio_main_decreasing(tmp_path, capsys):
    out = tmp_path / "r"
    rc = main(["ratio", "--model", "exp", "--theorem", "main", "--n", "64,256,1024",
               "--w-rect", "-2:-0.1:-1:1", "--res", "5", "--out", str(out)])
    assert rc == 0
    conv = json.loads((out / "convergence.json").read_text())
    assert conv["sup_error_decreasing"]
    assert [r["n"] for r in conv["convergence"]] == [64, 256, 1024]
    rows = _rows(out / "ratio_n64.csv")
    assert len(rows) == 25 and list(rows[0]) == ["n", "w_re", "w_im", "ratio_re", "ratio_im", "target_re",
                                                  "target_im", "abs_error"]


def test_ratio_drops_right_half_points(tmp_path):
    out = tmp_path / "r"
    assert main(["ratio", "--n", "16", "--w", "-1,0.5,0", "--out", str(out)]) == 0
    assert len(_rows(out / "ratio_n16.csv")) == 1


def test_ratio_newman_rivlin_half(tmp_path):
    out = tmp_path / "nr"
    assert main(["ratio", "--theorem", "newman-rivlin", "--n", "100", "--w", "0", "--out", str(out)]) == 0
    row = _rows(out / "ratio_n100.csv")[0]
    assert float(row["target_re"]) == 0.5 and float(row["target_im"]) == 0.0


def test_ratio_esv_golden(tmp_path):
    out = tmp_path / "esv"
    assert main(["ratio", "--model", "ml", "--lambda", "2", "--theorem", "esv", "--n", "128", "--w", "-1",
                 "--out", str(out)]) == 0
    row = _rows(out / "ratio_n128.csv")[0]
    ref = complex(*GOLD["esv_ml2_n128_wm1"])
    assert abs(complex(float(row["ratio_re"]), float(row["ratio_im"])) - ref) <= 1e-9 * abs(ref)


def test_zeros_n2(tmp_path):
    out = tmp_path / "z"
    assert main(["zeros", "--model", "exp", "--n", "2", "--scaling", "none", "--out", str(out)]) == 0
    rows = _rows(out / "zeros.csv")
    pts = sorted((round(float(r["re"]), 12), round(float(r["im"]), 12)) for r in rows)
    assert pts == [(-1.0, -1.0), (-1.0, 1.0)]


def test_zeros_figure_one(tmp_path):
    out = tmp_path / "f1"
    assert main(["zeros", "--model", "exp", "--n", "1..50", "--scaling", "none", "--overlay", "parabola",
                 "--out", str(out)]) == 0
    rep = json.loads((out / "zeros_report.json").read_text())
    assert rep["zero_count"] == 1275
    assert rep["parabola"]["violations"] == 0 and rep["parabola"]["min_slack"] > 0
    curves = {r["curve"] for r in _rows(out / "overlay.csv")}
    assert curves == {"limit_curve", "parabola"}


def test_zeros_sector_example_window(tmp_path):
    out = tmp_path / "s5"
    assert main(["zeros", "--model", "section5", "--n", "80", "--scaling", "by_n", "--window", "1",
                 "--out", str(out)]) == 0
    win = json.loads((out / "zeros_report.json").read_text())["window"][0]
    assert win["median_abs_arg"] > 3 * math.pi / 4


def test_rh_checks(tmp_path):
    out = tmp_path / "rh"
    assert main(["rh", "--check", "jumps", "--n", "20", "--out", str(out)]) == 0
    assert json.loads((out / "jumps.json").read_text())["all_ok"]
    assert main(["rh", "--check", "fnexplicit", "--n", "4,10", "--out", str(out)]) == 0
    tab = json.loads((out / "fnexplicit.json").read_text())
    assert len(tab["rows"]) == 20 and tab["max_relative_error"] <= 1e-6


def test_config_file_and_override(tmp_path):
    cfg = ExperimentConfig(model="exp", n_grid=(16,), w_points=(-1,), out_dir=str(tmp_path / "a"))
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert main(["ratio", "--config", str(path), "--n", "32", "--write-config"]) == 0
    written = ExperimentConfig.from_json((tmp_path / "a" / "config.json").read_text())
    assert written.n_grid == (32,) and written.w_points == (-1 + 0j,)
    assert (tmp_path / "a" / "ratio_n32.csv").exists()


def test_exit_codes(tmp_path):
    assert main(["ratio", "--model", "nope", "--n", "4", "--w", "-1", "--out", str(tmp_path)]) == 2
    assert main(["ratio", "--n", "4", "--w", "-1", "--max-prec", "100", "--out", str(tmp_path)]) == 2
    assert main(["disks", "--n", "10", "--eps", "0.6", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["ratio", "--config", str(bad)]) == 2


def test_exit_code_numeric_failure(tmp_path):
    # degree-300 exponential section scaled by n cannot be certified on the 53-bit rung alone
    assert main(["zeros", "--n", "300", "--max-prec", "53", "--out", str(tmp_path)]) == 1


def test_manifest_and_determinism(tmp_path):
    args = ["ratio", "--n", "16,64", "--w-rect", "-1.5:-0.5:-0.5:0.5", "--res", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["files"] == mb["files"]
    assert set(ma["files"]) == {"ratio_n16.csv", "ratio_n64.csv", "convergence.json"}
    assert "evaluate" in ma["stages"]
    m = RunManifest(**ma)
    assert m.verify(tmp_path / "a")


def test_selftest(capsys, tmp_path):
    assert main(["selftest", "--out", str(tmp_path / "a")]) == 0
    assert main(["selftest", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "selftest.json").read_bytes() == (tmp_path / "b" / "selftest.json").read_bytes()


def test_selftest_fault_injection(capsys):
    assert main(["selftest", "--inject-fault", "erfc"]) == 1
    out = capsys.readouterr().out
    assert "FAIL erfc_reflection" in out
    assert "FAILED: erfc_reflection" in out
    # the fault is removed afterwards
    assert main(["selftest"]) == 0
