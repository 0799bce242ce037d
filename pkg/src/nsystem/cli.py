"""Command-line front end: ``nsystem <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict

import numpy as np

from . import reference
from .ctmc import ctmc_oracle
from .exact import build_table, moments
from .fluid import clt_params, fluid_solve, idle_covariance, improved_theta, k_geometric
from .matching import match_run, total_variation
from .model import Shape, SystemParams, derive, load_params, scale, stability, symmetric_system
from .simulate import SimConfig, simulate

PARAM_FLAGS = ("lambda1", "lambda2", "n1", "n2", "mu1", "mu2")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _emit(args, doc=None, rows=None, text=None):
    """Write ``rows`` as CSV when asked, else ``doc`` as JSON; stdout unless --out."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
        out = buf.getvalue()
    elif text is not None and args.out is None:
        out = text
    else:
        out = json.dumps(_jsonable(doc), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _params(args) -> SystemParams:
    given = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}
    if args.params:
        if given:
            raise ValueError("use either --params or the individual rate/size flags, not both")
        return load_params(args.params)
    if len(given) != len(PARAM_FLAGS):
        missing = [f"--{k}" for k in PARAM_FLAGS if k not in given]
        raise ValueError(f"missing parameters: {' '.join(missing)} (or pass --params FILE)")
    return SystemParams(**given)


def cmd_fluid(args):
    p = _params(args)
    d = derive(p)
    sol = fluid_solve(p)
    pooled = d.alpha + sol.beta > 1
    doc = {
        "params": p.to_dict(),
        "derived": asdict(d),
        "stable": stability(p).stable,
        "pooled": pooled,
        "fluid": asdict(sol),
    }
    if pooled and stability(p).stable:
        doc["clt"] = asdict(clt_params(p))
        var1, var2, corr = idle_covariance(p)
        doc["clt_unscaled"] = {"var_i1": var1, "var_i2": var2, "corr": corr}
        doc["k_geometric"] = k_geometric(d.alpha, sol.beta)
    _emit(args, doc)
    return 0


def cmd_exact(args):
    p = _params(args)
    table = build_table(p)
    m = moments(table)
    if args.format == "csv":
        if args.out:
            table.to_csv(args.out)
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["k", "i1", "i2", "prob"])
            prob = table.prob()
            for k, i1, i2 in zip(*np.nonzero(np.isfinite(table.log_w))):
                w.writerow([k, i1, i2, repr(float(prob[k, i1, i2]))])
            sys.stdout.write(buf.getvalue())
        return 0
    doc = m.to_dict()
    status = 0
    if args.oracle:
        c = ctmc_oracle(p, args.qmax)
        deltas = {
            "mean_i1": m.mean_i1 - c.mean_i1,
            "var_i1": m.var_i1 - c.var_i1,
            "mean_i2": m.mean_i2 - c.mean_i2,
            "var_i2": m.var_i2 - c.var_i2,
            "p_i1_zero": m.p_i1_zero - c.p_i1_zero,
            "k_pmf_max": float(np.max(np.abs(m.k_pmf - c.k_pmf))),
        }
        worst = max(abs(v) for v in deltas.values())
        for name, v in deltas.items():
            print(f"exact-vs-ctmc {name:10s} {v:+.3e}", file=sys.stderr)
        print(f"truncation mass {c.truncation_mass:.3e}; max |delta| {worst:.3e}", file=sys.stderr)
        doc["oracle"] = {"qmax": args.qmax, "deltas": deltas, "truncation_mass": c.truncation_mass}
        if worst > args.oracle_tol:
            status = 1
    _emit(args, doc)
    return status


def cmd_simulate(args):
    p = _params(args)
    cfg = SimConfig(
        horizon=args.horizon,
        warmup_fraction=args.warmup,
        seed=args.seed,
        replications=args.replications,
        batch_count=args.batches,
        workers=args.workers,
        allow_unstable=args.allow_unstable,
        trace_limit=args.trace_limit if args.trace else 0,
    )
    stats = simulate(p, cfg)
    if args.trace:
        stats.write_trace(args.trace)
    _emit(args, stats.to_dict())
    return 0


def cmd_matching(args):
    if args.alpha is not None and args.beta is not None:
        alpha, beta = args.alpha, args.beta
    else:
        p = _params(args)
        alpha, beta = derive(p).alpha, fluid_solve(p).beta
    res = match_run(alpha, beta, args.steps, seed=args.seed, keep_trace=bool(args.trace))
    if args.trace:
        res.write_trace(args.trace)
    doc = res.to_dict()
    doc["tv_to_geometric"] = total_variation(res.pmf, k_geometric(alpha, beta))
    _emit(args, doc, rows=[{"k": k, "prob": float(v)} for k, v in enumerate(res.pmf)])
    return 0


def _reproduce_table1():
    rows = []
    for alpha, ref in reference.TABLE1.items():
        m = moments(build_table(symmetric_system(alpha)))
        row = {"alpha": alpha}
        for col, want in zip(reference.TABLE1_COLUMNS, ref):
            got = getattr(m, col)
            row[col] = got
            row[f"published_{col}"] = want
            row[f"delta_{col}"] = got - want
        rows.append(row)
    worst = max(abs(r[f"delta_{c}"]) for r in rows for c in reference.TABLE1_COLUMNS)
    return rows, worst, reference.TABLE1_TOL


def _reproduce_table2():
    rows = []
    for alpha, want in reference.TABLE2.items():
        p = symmetric_system(alpha)
        fp = improved_theta(p)
        exact = moments(build_table(p)).mean_i1
        rows.append({
            "alpha": alpha,
            "theta_star": fp.theta_star,
            "approx_mean_i1": fp.e_i1_approx,
            "published_approx": want,
            "delta": fp.e_i1_approx - want,
            "exact_mean_i1": exact,
        })
    worst = max(abs(r["delta"]) for r in rows)
    return rows, worst, reference.TABLE2_TOL


def cmd_reproduce(args):
    rows, worst, tol = _reproduce_table1() if args.table == 1 else _reproduce_table2()
    lines = []
    cols = list(rows[0])
    lines.append("  ".join(f"{c:>14s}" for c in cols))
    for r in rows:
        lines.append("  ".join(f"{r[c]:>14.6g}" for c in cols))
    ok = worst <= tol
    lines.append(f"table {args.table}: max |delta| = {worst:.3e} (tol {tol:g}) -> {'PASS' if ok else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _emit(args, {"table": args.table, "rows": rows, "max_abs_delta": worst, "tol": tol, "pass": ok}, rows=rows)
    sys.stdout.write(text)
    return 0 if ok else 1


def cmd_sweep(args):
    shape = Shape(alpha=args.alpha, theta=args.theta, rho=args.rho, mu1=args.mu1, mu2=args.mu2)
    rows = []
    for n in args.n:
        p = scale(shape, n)
        m = moments(build_table(p))
        sol = fluid_solve(p)
        d = derive(p)
        row = {
            "n": n, "n1": p.n1, "n2": p.n2,
            "mean_i1": m.mean_i1, "var_i1": m.var_i1,
            "mean_i2": m.mean_i2, "var_i2": m.var_i2,
            "cov": m.cov, "p_i1_zero": m.p_i1_zero,
            "fluid_m1": sol.m1, "fluid_m2": sol.m2,
        }
        if d.alpha + sol.beta > 1:
            var1, var2, _ = idle_covariance(p)
            row["clt_var_i1"] = var1
            row["clt_var_i2"] = var2
            row["tv_k_geometric"] = total_variation(m.k_pmf, k_geometric(d.alpha, sol.beta))
        rows.append(row)
    _emit(args, {"shape": asdict(shape), "rows": rows}, rows=rows)
    return 0


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsystem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    with_params = argparse.ArgumentParser(add_help=False, parents=[common])
    g = with_params.add_argument_group("system parameters")
    g.add_argument("--params", help="JSON file with the six primitive parameters")
    for name in ("lambda1", "lambda2", "mu1", "mu2"):
        g.add_argument(f"--{name}", type=float)
    for name in ("n1", "n2"):
        g.add_argument(f"--{name}", type=int)

    p = sub.add_parser("fluid", parents=[with_params], help="fluid, CLT and geometric-K approximations")
    p.set_defaults(func=cmd_fluid)

    p = sub.add_parser("exact", parents=[with_params], help="exact stationary moments (csv: full table)")
    p.add_argument("--oracle", action="store_true", help="compare with the truncated-CTMC solve")
    p.add_argument("--qmax", type=int, default=40)
    p.add_argument("--oracle-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", parents=[with_params], help="discrete-event simulation")
    p.add_argument("--horizon", type=float, default=1e4)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--warmup", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("--trace", help="write an event-trace CSV of the first replication")
    p.add_argument("--trace-limit", type=int, default=100_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("matching", parents=[with_params], help="FCFS infinite-matching K chain")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--trace", help="write the per-step K trace CSV")
    p.set_defaults(func=cmd_matching)

    p = sub.add_parser("reproduce", parents=[common], help="recompute the published tables")
    p.add_argument("--table", type=int, choices=(1, 2), required=True)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep", parents=[common], help="exact moments along a scaled family")
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated total server counts")
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--mu1", type=float, default=1.0)
    p.add_argument("--mu2", type=float, default=1.0)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"nsystem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
