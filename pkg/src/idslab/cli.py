"""``idslab <command> --config FILE [--threads N] [--no-cache] [--out DIR]``.

Exit status: 0 pass, 1 usage or config error, 2 numerical failure,
3 a theorem check ran but its verdict failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    combes_thomas_fit, compute_guaranteed_exponents, fit_power_law, holder_in_disorder,
    holder_in_energy, verdict, weak_disorder_table,
)
from .checks import selftest
from .config import COMMANDS, ConfigError, RunConfig, parse_config
from .dos_series import DivergentSeries, dos_series_run
from .estimator import EstimationError, estimate_ids, estimate_surface, wegner_probability
from .free_ids import n0_exact_1d, n0_quadrature
from .lattice import LatticeSpec, build_h0
from .spectral import InvalidQuery, NumericalFailure, resolvent_column

IDS_COLUMNS = ["lambda", "E", "mean", "stderr", "R", "L", "d", "boundary", "seed"]


@dataclass
class RunRecord:
    config_hash: str
    artifact_version: str
    wall_time: float
    outputs: list
    cached: bool = False
    passed: bool = None


def cache_root() -> Path:
    env = os.environ.get("IDSLAB_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "idslab"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


class _Writer:
    def __init__(self, directory: Path, cfg: RunConfig):
        self.dir = directory
        self.hash = cfg.config_hash()
        self.seed = cfg.model_dict["seed"]
        self.files = []

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        (self.dir / name).write_text(buf.getvalue(), encoding="utf-8")
        self.files.append(name)

    def json(self, name, obj):
        (self.dir / name).write_text(json.dumps(_plain(obj), indent=2, ensure_ascii=False) + "\n",
                                     encoding="utf-8")
        self.files.append(name)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _free_reference(model, energies):
    if not model.background.is_zero:
        return None
    d = model.lattice.dimension
    return n0_exact_1d(energies) if d == 1 else n0_quadrature(d, energies, 512)


def _cmd_ids(cfg, model, p, out, threads):
    est = estimate_ids(model, p["energies"], p["R"], threads)
    out.csv("ids.csv", IDS_COLUMNS, est.csv_rows())
    summary = {}
    if model.lam == 0:
        ref = _free_reference(model, est.energies)
        if ref is not None:
            dev = np.abs(est.mean - ref)
            out.csv("comparison.csv", ["E", "mean", "N0", "abs_dev"],
                    zip(est.energies, est.mean, ref, dev))
            summary["free_ids_max_abs_dev"] = float(dev.max())
    return summary, None


def _cmd_surface(cfg, model, p, out, threads):
    s = estimate_surface(model, p["energies"], p["lambdas"], p["R"], p["couple_seeds"], threads)
    out.csv("surface.csv", IDS_COLUMNS, s.csv_rows())
    return {}, None


def _cmd_holder_e(cfg, model, p, out, threads):
    est = estimate_ids(model, p["energies"], p["R"], threads)
    out.csv("ids.csv", IDS_COLUMNS, est.csv_rows())
    fit = holder_in_energy(est, tuple(p["window"]), p["separations"])
    q = compute_guaranteed_exponents(p["q1"], p["q_star"]).q_guaranteed
    v = verdict("holder_in_energy", fit, q)
    v["r_squared"], v["flags"] = fit.r_squared, list(fit.flags)
    out.json("verdict.json", v)
    return {}, v["pass"]


def _cmd_holder_lambda(cfg, model, p, out, threads):
    s = estimate_surface(model, [p["E"]], p["lambdas"], p["R"], p["couple_seeds"], threads)
    out.csv("surface.csv", IDS_COLUMNS, s.csv_rows())
    fit = holder_in_disorder(s, p["E"])
    q2 = compute_guaranteed_exponents(p["q1"], p["q_star"]).q2_guaranteed
    v = verdict("holder_in_disorder", fit, q2)
    v["r_squared"], v["flags"] = fit.r_squared, list(fit.flags)
    out.json("verdict.json", v)
    return {}, v["pass"]


def _cmd_weak(cfg, model, p, out, threads):
    lams = p["lambdas"]
    s = estimate_surface(model, [p["E"]], lams, p["R"], p["couple_seeds"], threads)
    out.csv("surface.csv", IDS_COLUMNS, s.csv_rows())
    n0 = p["n0_ref"]
    if n0 is None and 0.0 not in lams:
        ref = _free_reference(model, np.array([p["E"]]))
        if ref is None:
            raise ConfigError([("run.n0_ref", "needed when no lambda = 0 row and V0 is nonzero")])
        n0 = float(ref[0])
    t = weak_disorder_table(s, p["E"], n0)
    out.csv("weak_disorder.csv", ["lambda", "deviation", "stderr"], t.rows)
    k = int(np.argmin(np.where(t.lambdas > 0, t.lambdas, np.inf)))
    final_ok = bool(t.deviation[k] <= p["final_tolerance"] + 2 * t.stderr[k])
    v = {"theorem": "weak_disorder_convergence", "E": p["E"], "n0_ref": t.n0_ref,
         "nonincreasing": t.converges, "smallest_lambda_deviation": t.deviation[k],
         "final_tolerance": p["final_tolerance"], "pass": bool(t.converges and final_ok)}
    out.json("verdict.json", v)
    return {}, v["pass"]


def _cmd_wegner(cfg, model, p, out, threads):
    w = wegner_probability(model, p["E"], p["etas"], p["R"], threads)
    out.csv("wegner.csv", ["eta", "prob", "stderr", "R", "volume"],
            ((e, pr, se, w.realizations, w.volume) for e, pr, se in zip(w.etas, w.prob, w.stderr)))
    fit = fit_power_law(np.column_stack([w.etas, w.prob]), None, "energy")
    ok = p["slope_min"] <= fit.exponent <= p["slope_max"]
    v = {"theorem": "wegner", "E": p["E"], "slope": fit.exponent, "ci": fit.ci,
         "slope_range": [p["slope_min"], p["slope_max"]], "pass": bool(ok)}
    out.json("verdict.json", v)
    return {}, v["pass"]


def _cmd_ct(cfg, model, p, out, threads):
    d, L, E = model.lattice.dimension, model.lattice.linear_size, p["E"]
    fit = combes_thomas_fit(d, E, p["max_range"], L)
    lat = LatticeSpec(d, L)
    col = resolvent_column(build_h0(lat), complex(E), lat.center)
    ks = range(1, p["max_range"] + 1)
    out.csv("ct_decay.csv", ["k", "abs_G"], ((k, abs(col[lat.center + k])) for k in ks))
    v = {"theorem": "combes_thomas", "E": E, "rate": fit.rate, "prefactor": fit.prefactor,
         "r_squared": fit.r_squared, "required_rate": fit.d0 / 2, "pass": fit.passed}
    out.json("verdict.json", v)
    return {}, v["pass"]


def _cmd_dos(cfg, model, p, out, threads):
    r = dos_series_run(model, p["E"], p["epsilon"], p["K"], p["L_box"], p["R"],
                       p["c1_assumed"], p["force"], threads)
    out.csv("dos_series.csv", ["k", "re_T", "im_T", "stderr"], r.csv_rows())
    gap, comb = r.gap(), r.combined_stderr()
    t1_ok = len(r.orders) < 2 or abs(r.orders[1]) <= 3 * r.order_stderr[1]
    summary = {
        "convergence_check": asdict(r.check),
        "partial_sum": complex(r.partial_sums[-1]),
        "direct": r.direct_value,
        "direct_stderr": r.direct_stderr,
        "im_partial_sum_raw": float(r.partial_sums[-1].imag),
        "im_partial_sum_over_pi": float(r.partial_sums[-1].imag / math.pi),
        "im_direct_raw": r.direct_value.imag,
        "im_direct_over_pi": r.direct_value.imag / math.pi,
        "dos_normalization": "raw Im values and Im/pi are both reported",
    }
    v = {"theorem": "neumann_series", "gap": gap, "combined_stderr": comb,
         "t1_within_3se": bool(t1_ok), "pass": bool(gap <= 3 * comb and t1_ok)}
    out.json("verdict.json", v)
    return summary, v["pass"]


def _cmd_selftest(cfg, model, p, out, threads):
    rep = selftest(p["n_models"], p["n_energies"], cfg.model_dict["seed"], p["max_sites"])
    out.json("selftest.json", rep)
    return {}, rep["pass"]


HANDLERS = {
    "ids": _cmd_ids, "surface": _cmd_surface, "holder-e": _cmd_holder_e,
    "holder-lambda": _cmd_holder_lambda, "weak-disorder": _cmd_weak, "wegner": _cmd_wegner,
    "ct-decay": _cmd_ct, "dos-series": _cmd_dos, "selftest": _cmd_selftest,
}


def _model_echo(cfg):
    return cfg.model_dict


def run(cfg: RunConfig, out_dir, threads=None, use_cache=True) -> RunRecord:
    """Execute one configured experiment and write its outputs into ``out_dir``.

    With ``use_cache`` a previous run of an identical configuration is
    replayed from the cache instead of recomputed.
    """
    out_dir = Path(out_dir)
    h = cfg.config_hash()
    cached_dir = cache_root() / h
    if use_cache and (cached_dir / "record.json").is_file():
        rec = json.loads((cached_dir / "record.json").read_text(encoding="utf-8"))
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in rec["outputs"] + ["record.json"]:
            shutil.copyfile(cached_dir / name, out_dir / name)
        return RunRecord(rec["config_hash"], rec["artifact_version"], rec["wall_time"],
                         rec["outputs"], True, rec.get("passed"))

    t0 = time.perf_counter()
    model = cfg.model()
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out_dir) as tmp:
        w = _Writer(Path(tmp), cfg)
        extra, passed = HANDLERS[cfg.command](cfg, model, cfg.params, w, threads)
        wall = time.perf_counter() - t0
        summary = {"command": cfg.command, "config_hash": h, "artifact_version": __version__,
                   "model": _model_echo(cfg), "run": cfg.params, **extra,
                   "pass": passed, "wall_time": wall}
        w.json("summary.json", summary)
        (Path(tmp) / "config.ini").write_text(cfg.canonical(), encoding="utf-8")
        w.files.append("config.ini")
        rec = RunRecord(h, __version__, wall, list(w.files), False, passed)
        rec_text = json.dumps(_plain({k: v for k, v in asdict(rec).items() if k != "cached"}),
                              indent=2) + "\n"
        (Path(tmp) / "record.json").write_text(rec_text, encoding="utf-8")
        for name in w.files + ["record.json"]:
            shutil.move(str(Path(tmp) / name), out_dir / name)
    if use_cache:
        try:
            cached_dir.mkdir(parents=True, exist_ok=True)
            for name in rec.outputs + ["record.json"]:
                shutil.copyfile(out_dir / name, cached_dir / name)
        except OSError:
            shutil.rmtree(cached_dir, ignore_errors=True)
    return rec


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="idslab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI config file with [model] and [run]")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    ap.add_argument("--no-cache", action="store_true", help="always recompute")
    ap.add_argument("--out", default=".", help="output directory")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, args.command)
    except OSError as exc:
        print(f"idslab: cannot read config: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        for key, reason in exc.errors:
            print(f"idslab: config error: {key}: {reason}", file=sys.stderr)
        return 1
    if args.threads is not None and args.threads < 1:
        print("idslab: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        rec = run(cfg, args.out, args.threads, not args.no_cache)
    except ConfigError as exc:
        for key, reason in exc.errors:
            print(f"idslab: config error: {key}: {reason}", file=sys.stderr)
        return 1
    except (NumericalFailure, EstimationError, InvalidQuery, DivergentSeries) as exc:
        print(f"idslab: numerical failure in {type(exc).__module__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"idslab: {exc}", file=sys.stderr)
        return 1
    tag = " (cached)" if rec.cached else ""
    print(f"{cfg.command} {rec.config_hash}{tag}: {', '.join(rec.outputs)}")
    if rec.passed is False:
        print(f"{cfg.command}: verdict FAIL", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
