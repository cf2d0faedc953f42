"""Reduce seeded random 3-CNFs over a group and compare brute-force verdicts
with a truth-table oracle. Exits non-zero on any disagreement.

    python scripts/random_cnf_crosscheck.py --count 50 --max-vars 3 --max-clauses 4
"""
import argparse
import sys

import numpy as np

from fitgadget import gadget as gd, reduce as rd, solve as sv
from fitgadget.groups import builtin


def random_formula(rng: np.random.Generator, max_vars: int, max_clauses: int, width: int) -> rd.CnfFormula:
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_clauses + 1))
    clauses = []
    for _ in range(m):
        k = int(rng.integers(1, width + 1))
        clauses.append([int(rng.integers(1, n + 1)) * int(rng.choice([-1, 1])) for _ in range(k)])
    return rd.CnfFormula.from_lists(n, clauses)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--group", default="S4")
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--max-vars", type=int, default=4)
    ap.add_argument("--max-clauses", type=int, default=3)
    # short clauses make unsatisfiable formulas common enough to matter
    ap.add_argument("--width", type=int, default=3, help="maximum literals per clause before padding")
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=gd.DEFAULT_SEED)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    ctx = gd.prepare_context(builtin(args.group))
    rng = np.random.default_rng(args.seed)
    bad = 0
    for i in range(args.count):
        phi = random_formula(rng, args.max_vars, args.max_clauses, args.width)
        sat, eqv, rep = rd.reduce_sat(phi, ctx)
        truth, _ = sv.sat_bruteforce(phi)
        r1 = sv.polsat_bruteforce(sat, jobs=args.jobs, pruned=True)
        r2 = sv.poleqv_bruteforce(eqv, jobs=args.jobs, pruned=True)
        ok = (r1.verdict == sv.SAT_V) == truth and (r2.verdict == sv.HOLDS) == (not truth)
        if r1.witness is not None:
            ok &= phi.evaluate(rd.lift_witness(sat, r1.witness))
        bad += not ok
        print(f"{i:3d} n={phi.num_vars} m={phi.m} oracle={'SAT' if truth else 'UNSAT':5s} "
              f"polsat={r1.verdict:5s} poleqv={r2.verdict:17s} nodes={rep.dag_nodes} {'ok' if ok else 'MISMATCH'}")
    print(f"{args.count - bad}/{args.count} agree")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
