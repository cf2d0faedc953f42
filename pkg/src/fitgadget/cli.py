"""Command line entry point: ``fitgadget <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import gadget as gd
from . import reduce as rd
from . import solve as sv
from . import structure as st
from .errors import FitGadgetError, FittingLengthTooSmall, InputError
from .groups import FiniteGroup, builtin, export_group, read_group_file
from .poly import format_slp
from .verify import VerifyConfig, run_verify

log = logging.getLogger("fitgadget")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_group_arg(text: str) -> FiniteGroup:
    """A path to a group file, or a builtin name such as ``S4`` or ``C2xS3``."""
    p = Path(text)
    if p.exists():
        return read_group_file(p)
    return builtin(text)


def default_jobs() -> int:
    env = os.environ.get("FITGADGET_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"FITGADGET_JOBS={env!r} is not an integer") from None
    return 1


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[tuple[str, str]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


# subcommands

def analyze_report(G: FiniteGroup) -> dict:
    normals = st.all_normal_subgroups(G)
    lcs = st.lower_central_series(G)
    rep: dict = {
        "group": G.source,
        "order": G.order,
        "normal_subgroups": [list(N) for N in normals],
        "lower_central_series": [list(T) for T in lcs.terms],
        "nilpotent": st.is_nilpotent(G),
    }
    try:
        U = st.upper_fitting_series(G)
    except FitGadgetError as exc:
        rep["solvable"] = False
        rep["note"] = str(exc)
        return rep
    om = st.compute_omega(G, normals)
    rep.update({
        "solvable": True,
        "omega": om.to_json(),
        "fitting_subgroup": list(st.fitting_subgroup(G, om)),
        "upper_fitting_series": [list(T) for T in U.terms],
        "fitting_length": U.fitting_length,
    })
    try:
        ctx = gd.prepare_context(G)
    except FittingLengthTooSmall:
        rep["note"] = "gadget construction unavailable (d < 3)"
    else:
        rep["context"] = ctx.to_json()
        rep["pipeline"] = rd.choose_pipeline(ctx)
        over = {a: q for a, q in sorted(ctx.quotient_omegas.items()) if q > ctx.w}
        if over:
            rep["omega_note"] = f"quotient omega exceeds ambient omega {ctx.w} at levels {over}"
    return rep


def cmd_analyze(args) -> int:
    G = load_group_arg(args.group)
    rep = analyze_report(G)
    if args.format == "table":
        rows = [("group", rep["group"]), ("order", str(rep["order"])),
                ("normal subgroups", str(len(rep["normal_subgroups"])))]
        if rep.get("solvable"):
            rows += [("fitting length", str(rep["fitting_length"])),
                     ("omega", str(rep["omega"]["omega"])),
                     ("series orders", " < ".join(str(len(t)) for t in rep["upper_fitting_series"]))]
            if "context" in rep:
                c = rep["context"]
                rows += [("|K|, |K0|, |H|", f"{len(c['K'])}, {len(c['K0'])}, {len(c['H'])}"),
                         ("C", str(c["C"])), ("pipeline", rep["pipeline"])]
        if "note" in rep:
            rows.append(("note", rep["note"]))
        _emit(_table(rows), args.out)
    else:
        _emit(dumps(rep), args.out)
    return 0


def cmd_gadget(args) -> int:
    G = load_group_arg(args.group)
    ctx = gd.prepare_context(G)
    build = gd.build_AND_gadget if args.kind == "and" else gd.build_SAT_gadget
    fam = build(ctx, args.level, args.arity)
    header = fam.header()
    if args.verify != "none":
        r = gd.verify_gadget(ctx, fam, args.verify, seed=args.seed, trials=args.trials,
                             budget=args.exhaustive_budget, jobs=args.jobs)
        header["verification"] = r.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "group.json").write_text(dumps(export_group(ctx.G0, form="table")))
        (out / "gadget.slp").write_text(format_slp(fam.polynomial))
        (out / "gadget.json").write_text(dumps(header))
    sys.stdout.write(dumps(header))
    return 0 if header.get("verification", {}).get("passed", True) else 1


def cmd_reduce(args) -> int:
    G = load_group_arg(args.group)
    ctx = gd.prepare_context(G)
    src = rd.read_instance_file(args.instance)
    if isinstance(src, rd.CnfFormula):
        sat, eqv, rep = rd.reduce_sat(src, ctx)
    else:
        sat, eqv, rep = rd.reduce_coloring(src, ctx)
    rd.write_bundle(args.out, sat, eqv, rep, timings=args.timings)
    sys.stdout.write(dumps(rep.to_json(args.timings)))
    return 0


def cmd_solve(args) -> int:
    path = Path(args.bundle)
    manifests = [path] if path.is_file() else [path / "sat.json", path / "eqv.json"]
    results = {}
    for m in manifests:
        if not m.exists():
            continue
        inst = rd.read_bundle(m)
        res = sv.solve(inst, budget=args.budget, jobs=args.jobs, pruned=args.pruned)
        entry = res.to_json(timings=args.timings)
        entry["mode"] = inst.mode
        if res.witness is not None and inst.provenance.get("source"):
            entry["lifted"] = rd.lift_witness(inst, res.witness)
        results[m.stem] = entry
    if not results:
        raise InputError(f"{path}: no manifest found")
    sys.stdout.write(dumps(results))
    return 0


def cmd_verify(args) -> int:
    G = load_group_arg(args.group)
    cfg = VerifyConfig(exhaustive_budget=args.exhaustive_budget, seed=args.seed, trials=args.trials,
                       jobs=args.jobs)
    rep = run_verify(G, cfg)
    if args.format == "table":
        rows = [(c.name, f"{'ok' if c.passed else 'FAIL'} ({c.checked})") for c in rep.checks]
        rows += [("note", n) for n in rep.notes]
        rows.append(("overall", "PASS" if rep.passed else "FAIL"))
        _emit(_table(rows), args.out)
    else:
        _emit(dumps(rep.to_json()), args.out)
    return 0 if rep.passed else 1


def parse_range(text: str) -> range:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise InputError(f"arity range {text!r} is not of the form a..b") from None
    if lo < 1 or hi < lo:
        raise InputError(f"empty or invalid arity range {text!r}")
    return range(lo, hi + 1)


def random_cnf(num_vars: int, m: int, rng: np.random.Generator) -> rd.CnfFormula:
    clauses = []
    for _ in range(m):
        vs = rng.integers(1, num_vars + 1, size=3)
        signs = rng.choice([-1, 1], size=3)
        clauses.append([int(v * s) for v, s in zip(vs, signs)])
    return rd.CnfFormula.from_lists(num_vars, clauses)


def cmd_bench(args) -> int:
    G = load_group_arg(args.group)
    ctx = gd.prepare_context(G)
    rng = np.random.default_rng(args.seed)
    rows = []
    for m in parse_range(args.arity_range):
        t0 = time.perf_counter()
        if args.kind == "and":
            fam = gd.build_AND_gadget(ctx, args.level, m)
            nodes, length, solve_ms = fam.polynomial.node_count, fam.declared_flat_length, ""
            reduce_ms = (time.perf_counter() - t0) * 1e3
        else:
            phi = random_cnf(args.vars, m, rng)
            sat, _, rep = rd.reduce_sat(phi, ctx)
            reduce_ms = (time.perf_counter() - t0) * 1e3
            nodes, length = rep.dag_nodes, rep.flat_length
            solve_ms = ""
            if ctx.G0.order**sat.arity <= args.solve_budget:
                t1 = time.perf_counter()
                sv.polsat_bruteforce(sat, args.solve_budget, args.jobs)
                solve_ms = f"{(time.perf_counter() - t1) * 1e3:.3f}"
        rows.append([m, nodes, f"{np.log2(float(length)):.6f}", f"{reduce_ms:.3f}", solve_ms])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "dag_nodes", "log2_flat_length", "reduce_ms", "solve_ms"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fitgadget", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--jobs", type=int, default=None, help="worker threads (default: $FITGADGET_JOBS or 1)")
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=gd.DEFAULT_SEED)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structure report for a group")
    p.add_argument("group")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gadget", help="build an AND or SAT gadget family")
    p.add_argument("group")
    p.add_argument("--kind", choices=["and", "sat"], required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--arity", type=int, required=True)
    p.add_argument("--out", help="directory for group.json, gadget.slp, gadget.json")
    p.add_argument("--verify", choices=["none", "exhaustive", "sampled"], default="none")
    p.add_argument("--trials", type=int, default=gd.DEFAULT_TRIALS)
    p.add_argument("--exhaustive-budget", type=int, default=gd.DEFAULT_EXHAUSTIVE_BUDGET)
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("reduce", help="compile a DIMACS CNF or edge list into an equation bundle")
    p.add_argument("group")
    p.add_argument("instance")
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--timings", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("solve", help="brute-force a bundle or a single manifest")
    p.add_argument("bundle")
    p.add_argument("--budget", type=int, default=sv.DEFAULT_BUDGET)
    p.add_argument("--pruned", action="store_true")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the full check suite on a group")
    p.add_argument("group")
    p.add_argument("--exhaustive-budget", type=int, default=gd.DEFAULT_EXHAUSTIVE_BUDGET)
    p.add_argument("--trials", type=int, default=gd.DEFAULT_TRIALS)
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="CSV of gadget sizes and reduce/solve times")
    p.add_argument("group")
    p.add_argument("--arity-range", required=True, help="a..b")
    p.add_argument("--kind", choices=["and", "sat"], default="sat")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--vars", type=int, default=2, help="variables in random CNFs")
    p.add_argument("--solve-budget", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        if args.jobs is None:
            args.jobs = default_jobs()
        return args.func(args)
    except FitGadgetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
