"""One line per catalog group: order, omega, Fitting series orders, context summary."""
from fitgadget import gadget as gd, structure as st
from fitgadget.errors import FittingLengthTooSmall
from fitgadget.groups import CATALOG, builtin


def main() -> None:
    print(f"{'group':10s} {'order':>5s} {'omega':>5s}  series / context")
    for name in CATALOG:
        G = builtin(name)
        U = st.upper_fitting_series(G)
        om = st.compute_omega(G).omega
        line = f"{name:10s} {G.order:5d} {om:5d}  {[len(t) for t in U.terms]}"
        try:
            ctx = gd.prepare_context(G)
        except FittingLengthTooSmall:
            pass
        else:
            line += f"  |K|={len(ctx.K)} |K0|={len(ctx.K0)} |H|={len(ctx.H)} C={ctx.C}"
        print(line)


if __name__ == "__main__":
    main()
