"""Print flat lengths of AND_1^(m) / SAT_1^(m) and log2(length)/m^(1/(d-1)).

    python scripts/length_scaling.py S4 --max-arity 30
"""
import argparse
import math

from fitgadget import gadget as gd
from fitgadget.groups import builtin


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("group", nargs="?", default="S4")
    ap.add_argument("--max-arity", type=int, default=30)
    ap.add_argument("--kind", choices=["and", "sat"], default="and")
    args = ap.parse_args()

    ctx = gd.prepare_context(builtin(args.group))
    build = gd.build_AND_gadget if args.kind == "and" else gd.build_SAT_gadget
    expo = 1 / (ctx.d - 1)
    print(f"group={args.group} d={ctx.d} omega={ctx.w}")
    print("m,dag_nodes,log2_flat_length,normalized")
    ratios = []
    for m in range(1, args.max_arity + 1):
        fam = build(ctx, 1, m)
        lg = fam.log2_flat_length
        ratios.append(lg / m**expo)
        print(f"{m},{fam.polynomial.node_count},{lg:.3f},{ratios[-1]:.3f}")
    print(f"max/min of normalized column: {max(ratios) / min(ratios):.3f}")


if __name__ == "__main__":
    main()
