"""Command-line front end: ``nrlab {ratio,zeros,disks,rh,selftest}``.

Every data-producing command writes its files plus ``manifest.json`` (sha256 per file and
wall-clock per stage) into the output directory. Exit codes: 0 success, 1 numerical failure,
2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    FORMATS,
    THEOREMS,
    ExperimentConfig,
    RunManifest,
    parse_complex,
    parse_int_grid,
    parse_rect,
)
from .errors import ConfigError, DomainError, NumericalError
from .rh import (
    LEMMAS,
    F_n,
    F_n_closed,
    contour_for,
    fn_gn_agreement,
    jump_checks_F,
    jump_checks_G,
    jump_checks_P,
    lemma_decay_suite,
    m_decomposition,
)
from .saddle import limit_curve
from .sections import (
    RATIO_COLUMNS,
    ScalingWindow,
    cloud_to_dict,
    disk_count,
    dump_json,
    esv_ratio,
    newman_rivlin_ratio,
    parabola_slack,
    ratio_on_window,
    samples_to_dict,
    write_ratio_csv,
    write_zero_csv,
    zero_cloud,
)

log = logging.getLogger("nrlab")

# fixed probe points for the F_n closed-form table: five inside the contour, five outside
FN_PROBES = (0.3, 0.5 + 0.2j, 0.7 - 0.35j, 0.2 + 0.6j, 0.85 + 0.05j,
             1.4 + 0.3j, -1.5, 0.8 + 0.9j, 1.3 - 0.6j, -0.2 - 1.3j)


class _Stages:
    def __init__(self):
        self.times = {}

    def run(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        self.times[name] = round(time.perf_counter() - t0, 4)
        return out


# --- work items (module-level so they pickle for worker processes) -------------------------


def _ratio_item(cfg_json: str, n: int, ws: tuple):
    cfg = ExperimentConfig.from_json(cfg_json)
    model = cfg.build_model()
    if cfg.theorem == "main":
        return ratio_on_window(model, ScalingWindow.for_model(model, n, ws), cfg.rtol, cfg.max_prec)
    if cfg.theorem == "newman-rivlin":
        return [newman_rivlin_ratio(n, w, cfg.rtol, cfg.max_prec) for w in ws]
    lam = model.profile.lam
    return [esv_ratio(lam, n, w, cfg.rtol, cfg.max_prec) for w in ws]


def _cloud_item(cfg_json: str, n: int):
    cfg = ExperimentConfig.from_json(cfg_json)
    return zero_cloud(cfg.build_model(), n, cfg.scaling, max_prec=cfg.max_prec)


def _window_cloud_item(cfg_json: str, n: int):
    cfg = ExperimentConfig.from_json(cfg_json)
    from .sections import window_cloud

    return window_cloud(cfg.build_model(), n, cfg.max_prec)


def _map(cfg: ExperimentConfig, fn, items):
    """Ordered map; results come back in item order whatever the worker count."""
    payload = cfg.to_json()
    if cfg.workers == 1:
        return [fn(payload, *it) for it in items]
    with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, [payload] * len(items), *zip(*items)))


def _write(out: Path, name: str, manifest: RunManifest, writer):
    p = out / name
    writer(p)
    manifest.add_file(p, out)
    return p


def _write_json(out, name, manifest, obj):
    return _write(out, name, manifest, lambda p: dump_json(obj, p))


# --- subcommands ---------------------------------------------------------------------------


def cmd_ratio(cfg: ExperimentConfig, out: Path, manifest: RunManifest, st: _Stages):
    ws = cfg.w_grid()
    if cfg.theorem == "main":
        kept = tuple(w for w in ws if w.real < 0)
        if len(kept) < len(ws):
            log.info("dropped %d window points with Re w >= 0 (the main ratio is only asymptotic for Re w < 0)", len(ws) - len(kept))
        ws = kept
        if not ws:
            raise ConfigError("no window points with Re w < 0 remain")
    per_n = st.run("evaluate", _map, cfg, _ratio_item, [(n, ws) for n in cfg.n_grid])
    summary = []
    prev = None
    for n, samples in zip(cfg.n_grid, per_n):
        sup = max(s.abs_error for s in samples)
        summary.append({"n": n, "sup_error": sup, "ratio_to_previous": (sup / prev) if prev else None})
        prev = sup
        if cfg.fmt == "csv":
            _write(out, f"ratio_n{n}.csv", manifest, lambda p, s=samples: write_ratio_csv(s, p))
        else:
            _write_json(out, f"ratio_n{n}.json", manifest, {"columns": list(RATIO_COLUMNS), "rows": samples_to_dict(samples)})
    report = {"theorem": cfg.theorem, "model": cfg.model, "convergence": summary,
              "sup_error_decreasing": all(a["sup_error"] > b["sup_error"] for a, b in zip(summary, summary[1:]))}
    _write_json(out, "convergence.json", manifest, report)
    for row in summary:
        r = row["ratio_to_previous"]
        print(f"n={row['n']:>6}  sup_error={row['sup_error']:.6e}" + (f"  ratio={r:.4f}" if r else ""))
    return 0


def _overlay(cfg, lam):
    rows = [("limit_curve", float(z.real), float(z.imag)) for z in limit_curve(lam, 512)]
    if "parabola" in cfg.overlay:
        # y^2 = 4(x + 1), sampled by y
        for y in np.linspace(-8, 8, 321):
            rows.append(("parabola", float(y * y / 4 - 1), float(y)))
    return rows


def cmd_zeros(cfg: ExperimentConfig, out: Path, manifest: RunManifest, st: _Stages):
    model = cfg.build_model()
    clouds = st.run("zeros", _map, cfg, _cloud_item, [(n,) for n in cfg.n_grid])
    if cfg.fmt == "csv":
        _write(out, "zeros.csv", manifest, lambda p: write_zero_csv(clouds, p))
    else:
        _write_json(out, "zeros.json", manifest, [cloud_to_dict(c) for c in clouds])
    report = {"model": cfg.model, "scaling": cfg.scaling, "n_grid": list(cfg.n_grid),
              "zero_count": int(sum(c.zeros.size for c in clouds)),
              "max_residual": float(max(c.residuals.max() for c in clouds)),
              "precision_bits": {str(c.n): c.precision_bits for c in clouds}}
    if cfg.overlay:
        rows = _overlay(cfg, model.profile.lam)

        def w(p):
            import csv

            with open(p, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(("curve", "re", "im"))
                for r in rows:
                    wr.writerow((r[0], repr(r[1]), repr(r[2])))

        _write(out, "overlay.csv", manifest, w)
    if "parabola" in cfg.overlay and cfg.model == "exp" and cfg.scaling == "none":
        slack = min(float(np.min(parabola_slack(c.zeros))) for c in clouds)
        report["parabola"] = {"min_slack": slack, "violations": int(sum(np.sum(parabola_slack(c.zeros) <= 0) for c in clouds))}
        print(f"parabola: min slack {slack:.6g}, violations {report['parabola']['violations']}")
    if cfg.window is not None:
        win = []
        for c in clouds:
            near = c.zeros[np.abs(c.zeros - 1) <= cfg.window]
            args = np.abs(np.angle(near - 1))
            win.append({"n": c.n, "radius": cfg.window, "count": int(near.size),
                        "median_abs_arg": float(np.median(args)) if near.size else None})
            if near.size:
                print(f"n={c.n}: {near.size} zeros within {cfg.window} of 1, median |arg(z-1)| = {np.median(args):.4f}"
                      f" (3pi/4 = {3 * math.pi / 4:.4f})")
        report["window"] = win
    _write_json(out, "zeros_report.json", manifest, report)
    print(f"{report['zero_count']} zeros, max residual {report['max_residual']:.3g}")
    return 0


def cmd_disks(cfg: ExperimentConfig, out: Path, manifest: RunManifest, st: _Stages):
    if not 0 < cfg.epsilon < 0.5:
        raise ConfigError("epsilon must lie in (0, 1/2)")
    model = cfg.build_model()
    clouds = st.run("zeros", _map, cfg, _window_cloud_item, [(n,) for n in cfg.n_grid])
    rep = st.run("count", disk_count, model, cfg.n_grid, cfg.epsilon, clouds=dict(zip(cfg.n_grid, clouds)))
    rows = [{"n": n, "epsilon": cfg.epsilon, "radius": r, "count": c, "nearest": d}
            for n, r, c, d in zip(rep.n_grid, rep.radii, rep.counts, rep.nearest)]
    if cfg.fmt == "csv":
        def w(p):
            import csv

            with open(p, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(("n", "epsilon", "radius", "count", "nearest"))
                for r in rows:
                    wr.writerow((r["n"], repr(r["epsilon"]), repr(r["radius"]), r["count"], repr(r["nearest"])))

        _write(out, "disks.csv", manifest, w)
    _write_json(out, "disks_report.json", manifest, {"model": cfg.model, "rows": rows, "nondecreasing": rep.nondecreasing})
    for r in rows:
        print(f"n={r['n']:>5}  radius={r['radius']:.4f}  count={r['count']}  nearest={r['nearest']:.4f}")
    print(f"nondecreasing: {rep.nondecreasing}")
    return 0


BRACKETS = {"G_on_Gamma1": (-0.65, -0.35), "F_on_Gamma1": (-0.65, -0.35), "P_on_Gamma1": (-0.65, -0.35)}


def cmd_rh(cfg: ExperimentConfig, out: Path, manifest: RunManifest, st: _Stages):
    model = cfg.build_model()
    contour = st.run("contour", contour_for, model)
    lemmas = cfg.lemmas
    if "all" in lemmas:
        lemmas = LEMMAS
    if not lemmas and not cfg.checks:
        lemmas = LEMMAS
    for name in lemmas:
        if name not in LEMMAS:
            raise ConfigError(f"unknown lemma {name!r}; choose from {LEMMAS} or 'all'")
    status = 0
    if lemmas:
        records = {}
        for name in lemmas:
            fit = st.run(f"lemma_{name}", lemma_decay_suite, name, model, contour, cfg.n_grid)
            d = fit.to_dict()
            if name in BRACKETS:
                lo, hi = BRACKETS[name]
                d["bracket"] = [lo, hi]
                d["bracket_ok"] = bool(lo <= fit.fitted_slope <= hi)
            else:
                d["bracket_ok"] = bool(fit.fitted_slope < 0 and fit.relative_residual < 0.1)
            records[name] = d
            print(f"{name:<12} slope={fit.fitted_slope:+.4f}  residual={fit.fit_residual:.3g}  ok={d['bracket_ok']}")
        _write_json(out, "lemmas.json", manifest, records)
        md = st.run("m_decomposition", m_decomposition, model, contour, n=64)
        _write_json(out, "m_decomposition.json", manifest, md.to_dict())
        print(f"m decomposition at n=64: discrepancy {md.discrepancy:.3g}")
    for check in cfg.checks:
        if check == "jumps":
            rows = []
            for n in cfg.n_grid:
                for c in st.run(f"jumps_n{n}", lambda n=n: jump_checks_F(model, contour, n)
                                + jump_checks_G(contour, model.profile.lam, n) + jump_checks_P(model.profile.lam, n)):
                    rows.append({"n": n, "kind": c.kind, "z0": [c.z0.real, c.z0.imag], "residual": c.residual,
                                 "tolerance": c.tolerance, "ok": c.ok})
            ok = all(r["ok"] for r in rows)
            _write_json(out, "jumps.json", manifest, {"rows": rows, "all_ok": ok})
            print(f"jump checks: {sum(r['ok'] for r in rows)}/{len(rows)} within tolerance")
            status = status or (0 if ok else 1)
        elif check == "fnexplicit":
            rows = []
            for n in cfg.n_grid:
                for z in FN_PROBES:
                    q = F_n(model, contour, n, z).value
                    c = F_n_closed(model, n, z, contour.contains(z))
                    rows.append({"n": n, "z": [z.real, complex(z).imag], "quadrature": [q.real, q.imag],
                                 "closed_form": [c.real, c.imag], "relative_error": abs(q - c) / abs(c)})
            worst = max(r["relative_error"] for r in rows)
            _write_json(out, "fnexplicit.json", manifest, {"rows": rows, "max_relative_error": worst})
            print(f"F_n closed form: max relative error {worst:.3g} over {len(rows)} points")
            status = status or (0 if worst <= 1e-6 else 1)
        elif check == "fngn":
            fit = fn_gn_agreement(model, contour, cfg.n_grid)
            _write_json(out, "fn_gn.json", manifest, fit.to_dict())
            print("|F_n - G_n|: " + ", ".join(f"{m:.3g}" for m in fit.magnitudes))
        else:
            raise ConfigError(f"unknown check {check!r}")
    return status


def cmd_selftest(args) -> int:
    from .selftest import injected_fault, run_checks

    t0 = time.perf_counter()
    if args.inject_fault:
        with injected_fault(args.inject_fault):
            results = run_checks()
    else:
        results = run_checks()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.ok]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        dump_json({"checks": [{"name": r.name, "ok": r.ok, "detail": r.detail} for r in results]}, out / "selftest.json")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {time.perf_counter() - t0:.1f} s")
    if failed:
        print("FAILED: " + ", ".join(failed))
        return 1
    return 0


# --- argument handling -----------------------------------------------------------------------


def _common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--model", default=S, help="exp, ml, section5, or a table-model JSON path")
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--n", dest="n_grid", type=parse_int_grid, default=S, help="e.g. 64,256,1024 or 1..50")
    p.add_argument("--out", dest="out_dir", default=S)
    p.add_argument("--format", dest="fmt", choices=FORMATS, default=S)
    p.add_argument("--rtol", type=float, default=S)
    p.add_argument("--max-prec", dest="max_prec", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--write-config", action="store_true", help="also write the resolved config.json")


def build_parser():
    ap = argparse.ArgumentParser(prog="nrlab", description="Partial-sum asymptotics laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("ratio", help="section-to-function ratios in the critical window")
    _common(p)
    p.add_argument("--theorem", choices=THEOREMS, default=S)
    p.add_argument("--w", dest="w_points", type=lambda s: tuple(parse_complex(v) for v in s.split(",")), default=S)
    p.add_argument("--w-rect", dest="w_rect", type=parse_rect, default=S, help="re_min:re_max:im_min:im_max")
    p.add_argument("--res", dest="w_resolution", type=int, default=S)

    p = sub.add_parser("zeros", help="zero clouds of scaled sections")
    _common(p)
    p.add_argument("--scaling", choices=("by_n", "by_r_n", "none"), default=S)
    p.add_argument("--overlay", type=lambda s: tuple(s.split(",")), default=S, help="parabola")
    p.add_argument("--window", type=float, default=S, help="report zeros within this distance of 1")

    p = sub.add_parser("disks", help="zero counts in the disks |z - r_n| <= r_n n^(-1/2+eps)")
    _common(p)
    p.add_argument("--eps", dest="epsilon", type=float, default=S)

    p = sub.add_parser("rh", help="boundary-integral machinery: lemma decay suites and identity checks")
    _common(p)
    p.add_argument("--lemmas", type=lambda s: tuple(s.split(",")), default=S, help="all or a list of " + ",".join(LEMMAS))
    p.add_argument("--check", dest="checks", action="append", choices=("jumps", "fnexplicit", "fngn"), default=S)

    p = sub.add_parser("selftest", help="fast invariant suite")
    p.add_argument("--out", default=None)
    p.add_argument("--inject-fault", choices=("erfc",), default=None, help=argparse.SUPPRESS)
    return ap


def resolve_config(args) -> ExperimentConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = ExperimentConfig.from_json(Path(args.config).read_text()).to_dict()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        base.pop("schema", None)
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose", "write_config")}
    if "w_points" in flags:
        flags["w_points"] = [[w.real, w.imag] for w in flags["w_points"]]
    if "checks" in flags:
        flags["checks"] = list(flags["checks"])
    base.update(flags)
    if args.command == "disks" and "n_grid" not in base:
        base["n_grid"] = [50, 100, 200, 400]
    return ExperimentConfig.from_dict(base).validate()


COMMANDS = {"ratio": cmd_ratio, "zeros": cmd_zeros, "disks": cmd_disks, "rh": cmd_rh}


def _glue_negative_values(argv):
    """'--w-rect -2:-0.1:-1:1' -> '--w-rect=-2:-0.1:-1:1' so argparse does not read a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--w-rect", "--w"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_glue_negative_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(args.command, cfg.to_dict())
        if args.write_config:
            _write(out, "config.json", manifest, lambda p: p.write_text(cfg.to_json()))
        st = _Stages()
        status = COMMANDS[args.command](cfg, out, manifest, st)
        manifest.stages = st.times
        manifest.write(out)
        return status
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
