"""msched command line: solve, verify, gap, gen, bench.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 refusal because an instance is beyond an oracle or arithmetic budget.
Errors go to stderr as one JSON object per line.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .instances import (
    GAP_FAMILIES, PHI, ExponentTooLarge, RandomSpec, from_nonmalleable, gap_threshold, gen_random,
    load_instance, load_schedule, save_instance, save_schedule,
)
from .lp import UndefinedCriticalSpeed
from .model import ModelError, fmt, fmt_dec, objectives, parse_p, verify_schedule
from .oracle import Bracket, BudgetExceeded, OracleBudget, brute_force_makespan, min_feasible_C
from .rounding import SCHEMES, guarantee
from .search import SearchConfig, farey_candidates, makespan_bounds, minimize_makespan
from .weighted import WeightedConfig, solve_weighted

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

GAP_COLUMNS = ["family", "k", "C", "C_dec", "C_exact", "reference_C", "OPT", "OPT_dec", "gap", "gap_dec"]
BENCH_COLUMNS = ["instance", "scheme", "objective", "C_found", "C_found_dec", "value", "value_dec",
                 "ratio", "rho", "seconds"]


class UsageError(Exception):
    pass


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def max_workers() -> int:
    raw = os.environ.get("MSCHED_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise UsageError(f"MSCHED_THREADS must be an integer, got {raw!r}")
    return cap


def _fan_out(fn, items):
    """Ordered map, in worker processes when more than one is allowed."""
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _rational_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _k_range(text: str) -> range:
    try:
        a, b = text.split("..") if ".." in text else (text, text)
        a, b = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}")
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"k-range must satisfy 1 <= a <= b, got {text!r}")
    return range(a, b + 1)


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


# ---------------------------------------------------------------------------
# solve


def _solve(instance, scheme, objective, eps, tau=2, alpha=2):
    """``(schedule, summary dict)`` for one instance and scheme."""
    if objective == "weighted":
        res = solve_weighted(instance, config=WeightedConfig(tau, alpha, scheme))
        lp = res.plan.lp_value
        return res.schedule, {
            "scheme": scheme, "objective": "weighted", "C_found": None,
            "value": res.value, "lp_value": lp, "rho": res.rho,
            "ratio": float(res.value / lp) if lp else 0.0,
        }
    res = minimize_makespan(instance, SearchConfig(eps=eps, scheme=scheme))
    return res.schedule, {
        "scheme": scheme, "objective": "makespan", "C_found": res.C,
        "value": res.makespan, "rho": guarantee(scheme, instance.p), "ratio": res.ratio,
    }


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.p is not None:
        inst = inst.with_p(args.p)
    if args.objective == "weighted" and args.p not in (None, Fraction(1)):
        raise UsageError("the weighted objective supports p = 1 only")
    schedule, s = _solve(inst, args.scheme, args.objective, args.eps, args.tau, args.alpha)
    bad = verify_schedule(inst, schedule)
    if bad:  # pragma: no cover - the solvers assert this already
        _error("verification", "; ".join(map(str, bad)))
        return EXIT_VERIFY
    if args.out:
        save_schedule(schedule, args.out)
    label = "makespan" if s["objective"] == "makespan" else "weighted_sum"
    ref = "C_found" if s["objective"] == "makespan" else "lp_value"
    refv = s[ref]
    print(f"scheme={s['scheme']} {ref}={fmt(refv)} ({fmt_dec(refv)}) "
          f"{label}={fmt(s['value'])} ({fmt_dec(s['value'])}) "
          f"rho={fmt_dec(s['rho'])} ratio={fmt_dec(s['ratio'])}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    schedule = load_schedule(args.schedule, inst.n)
    bad = verify_schedule(inst, schedule)
    if bad:
        for v in bad:
            print(f"violation: {v}")
        return EXIT_VERIFY
    mk, total = objectives(inst, schedule)
    print(f"ok makespan={fmt(mk)} ({fmt_dec(mk)}) weighted_sum={fmt(total)} ({fmt_dec(total)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gap


def gap_row(task) -> dict:
    family, k, budget = task
    inst = GAP_FAMILIES[family](k)
    lb, ub = makespan_bounds(inst)
    found = min_feasible_C(inst, farey_candidates(lb, ub, max(24, 2 * k + 1)))
    exact = not isinstance(found, Bracket)
    C = found if exact else found.hi
    row = {"family": family, "k": k, "C": fmt(C), "C_dec": fmt_dec(C), "C_exact": int(exact),
           "reference_C": fmt(gap_threshold(family, k)),
           "OPT": "", "OPT_dec": "", "gap": "", "gap_dec": ""}
    try:
        opt, _ = brute_force_makespan(inst, budget)
    except BudgetExceeded:
        return row
    row.update(OPT=fmt(opt), OPT_dec=fmt_dec(opt), gap=fmt(opt / C), gap_dec=fmt_dec(opt / C))
    return row


def cmd_gap(args) -> int:
    budget = OracleBudget(args.max_jobs, args.max_machines, args.max_combinations)
    rows = _fan_out(gap_row, [(args.family, k, budget) for k in args.k_range])
    for r in rows:
        print(" ".join(f"{c}={r[c]}" for c in ("family", "k", "C", "OPT", "gap")))
    if args.csv:
        _write_csv(args.csv, GAP_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def _matrix(text: str):
    try:
        return [[int(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected rows like '1,2;2,1', got {text!r}")


def cmd_gen(args) -> int:
    fam = args.family
    if fam.startswith("gap-"):
        if args.k is None:
            raise UsageError(f"--k is required for {fam}")
        key = fam[len("gap-"):]
        inst = GAP_FAMILIES[key](args.k) if key != "unrelated" else GAP_FAMILIES[key](args.k, args.phi)
    elif fam == "random":
        inst = gen_random(RandomSpec(args.seed, args.machines, args.jobs, args.fn_family,
                                     args.variant, args.weighted, args.p, args.unit_floor))
    else:
        if args.matrix is None:
            raise UsageError("--matrix is required for nonmalleable")
        inst = from_nonmalleable(args.matrix)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {inst.m} machines, {inst.n} jobs ({inst.name})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def bench_row(task) -> dict:
    path, scheme, objective, eps = task
    inst = load_instance(path)
    t0 = time.perf_counter()
    _, s = _solve(inst, scheme, objective, eps)
    dt = time.perf_counter() - t0
    ref = s["C_found"] if objective == "makespan" else s["lp_value"]
    return {"instance": Path(path).name, "scheme": scheme, "objective": objective,
            "C_found": fmt(ref), "C_found_dec": fmt_dec(ref),
            "value": fmt(s["value"]), "value_dec": fmt_dec(s["value"]),
            "ratio": fmt_dec(s["ratio"]), "rho": fmt_dec(s["rho"]), "seconds": f"{dt:.4f}"}


def cmd_bench(args) -> int:
    files = sorted(Path(args.dir).glob("*.json"))
    if not files:
        raise UsageError(f"no *.json instances in {args.dir}")
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEMES:
            raise UsageError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    tasks = [(str(f), s, args.objective, args.eps) for f in files for s in schemes]
    rows = _fan_out(bench_row, tasks)
    worst = max(float(r["ratio"]) for r in rows)
    for r in rows:
        print(f"{r['instance']} {r['scheme']} ratio={r['ratio']} rho={r['rho']} t={r['seconds']}s")
    print(f"max ratio {worst:.6g} over {len(rows)} runs")
    if args.csv:
        _write_csv(args.csv, BENCH_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msched", description="Malleable job scheduling via LP rounding.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="round an instance and write the schedule")
    p.add_argument("--instance", required=True)
    p.add_argument("--scheme", choices=SCHEMES, default="filtered")
    p.add_argument("--p", type=parse_p, default=None, help="speed regularizer override (number or inf)")
    p.add_argument("--objective", choices=("makespan", "weighted"), default="makespan")
    p.add_argument("--eps", type=_rational_arg, default=Fraction(1, 10**6))
    p.add_argument("--tau", type=_rational_arg, default=Fraction(2))
    p.add_argument("--alpha", type=_rational_arg, default=Fraction(2))
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a schedule against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gap", help="LP threshold versus optimum on the gap families")
    p.add_argument("--family", choices=sorted(GAP_FAMILIES), required=True)
    p.add_argument("--k-range", type=_k_range, default=range(1, 4))
    p.add_argument("--csv")
    p.add_argument("--max-jobs", type=int, default=4)
    p.add_argument("--max-machines", type=int, default=5)
    p.add_argument("--max-combinations", type=int, default=10**7)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("gen", help="write an instance file")
    p.add_argument("--family", required=True,
                   choices=("gap-unrelated", "gap-restricted", "gap-uniform", "random", "nonmalleable"))
    p.add_argument("--k", type=int)
    p.add_argument("--phi", type=_rational_arg, default=PHI)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--machines", type=int, default=3)
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--fn-family", default="capped_inverse",
                   choices=("capped_inverse", "amdahl", "power_law", "mixed"))
    p.add_argument("--variant", default="unrelated", choices=("unrelated", "restricted", "uniform"))
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--unit-floor", action="store_true")
    p.add_argument("--p", type=parse_p, default=1)
    p.add_argument("--matrix", type=_matrix, help="processing times, rows ';'-separated")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run schemes over a directory of instances")
    p.add_argument("--dir", required=True)
    p.add_argument("--schemes", default="simple,filtered,beta")
    p.add_argument("--objective", choices=("makespan", "weighted"), default="makespan")
    p.add_argument("--eps", type=_rational_arg, default=Fraction(1, 10**6))
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (BudgetExceeded, UndefinedCriticalSpeed, ExponentTooLarge) as exc:
        _error("budget", str(exc))
        return EXIT_BUDGET
    except (UsageError, ModelError, FileNotFoundError, ValueError) as exc:
        _error("usage", str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
