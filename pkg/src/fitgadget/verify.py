"""Aggregate verification suite behind ``fitgadget verify``.

Runs every structural, identity, gadget and reduction check that fits the
exhaustive budget and collects them into one deterministic report.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import gadget as gd
from . import identities as ids
from . import reduce as rd
from . import solve as sv
from . import structure as st
from .errors import CapExceeded, FittingLengthTooSmall
from .groups import FiniteGroup


@dataclass
class VerifyConfig:
    exhaustive_budget: int = gd.DEFAULT_EXHAUSTIVE_BUDGET
    seed: int = gd.DEFAULT_SEED
    trials: int = gd.DEFAULT_TRIALS
    identity_samples: int = ids.DEFAULT_SAMPLES
    sampled_and_max: int = 8
    jobs: int = 1


@dataclass
class Check:
    name: str
    passed: bool
    checked: int = 0
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed), "checked": int(self.checked)}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class VerifySuiteReport:
    group: str
    order: int
    fitting_length: int
    checks: list[Check]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"group": self.group, "order": self.order, "fitting_length": self.fitting_length,
                "passed": self.passed, "checks": [c.to_json() for c in self.checks], "notes": self.notes}


def _from_report(name: str, r) -> Check:
    detail = {}
    if not r.passed:
        detail = r.to_json()
    return Check(name, r.passed, r.checked, detail)


def structure_checks(G: FiniteGroup, normals) -> list[Check]:
    checks = []
    baer = st.fitting_subgroup(G)
    lat = st.fitting_subgroup_by_lattice(G)
    checks.append(Check("Fitting subgroup: Baer set equals nilpotent-normal join", baer == lat, 1,
                        {} if baer == lat else {"baer": list(baer), "lattice": list(lat)}))
    try:
        U = st.upper_fitting_series(G)
    except Exception:  # not solvable: nothing further to compare
        return checks
    ok, n = True, 0
    for N in normals:
        UN = st.subgroup_fitting_series(G, N)
        for i in range(U.fitting_length + 1):
            n += 1
            mine = UN[min(i, UN.fitting_length)]
            ok &= mine == st.Subgroup.of(set(U[i]) & set(N))
    checks.append(Check("upper Fitting series restricts to normal subgroups", ok, n))
    levels = [U.level(x) for x in range(G.order)]
    closure_levels = [st.subgroup_fitting_series(G, st.normal_closure(G, [x])).fitting_length
                      for x in range(G.order)]
    checks.append(Check("Fitting level of an element equals that of its normal closure",
                        levels == closure_levels, G.order))
    return checks


def identity_checks(G: FiniteGroup, cfg: VerifyConfig) -> list[Check]:
    if G.order <= 24:
        reports = ids.exhaustive_suite(G)
    else:
        reports = ids.sampled_suite(G, cfg.identity_samples, cfg.seed)
    return [_from_report(f"identity: {r.name}", r) for r in reports]


def _fits(ctx: gd.GadgetContext, arity: int, cfg: VerifyConfig) -> bool:
    return ctx.G0.order**arity <= cfg.exhaustive_budget


def context_checks(ctx: gd.GadgetContext, cfg: VerifyConfig) -> list[Check]:
    checks = [Check(f"context: {name}", ok, 1) for name, ok in ctx.invariants()]
    G0 = ctx.G0
    outside = [x for x in ctx.K if x not in ctx.K0]
    ok = all(st.normal_closure(G0, [x]) == ctx.K for x in outside)
    checks.append(Check("every element of K \\ K0 normally generates K", ok, len(outside)))
    gs = [x for x in range(G0.order) if x not in ctx.H]
    reps = [ctx.phi(g) for g in gs]
    checks.append(Check("[-, g] induces an automorphism of K/K0 for g outside H",
                        all(r.is_homomorphism and r.is_bijective_on_quotient for r in reps), len(gs)))
    pairs = 0
    decomp = True
    for A in ctx.normals:
        for B in ctx.normals:
            if st.join(G0, A, B) == ctx.K:
                pairs += 1
                decomp &= A == ctx.K or B == ctx.K
    checks.append(Check("K is not a product of two smaller normal subgroups", decomp, pairs))
    checks.append(_from_report("q~1(x, y) coset behaviour on K", gd.verify_qstar1_on_K(ctx)))
    if len(ctx.K) * G0.order**3 <= cfg.exhaustive_budget:
        checks.append(_from_report("D(x, y1, y2, y3) coset behaviour on K", gd.verify_D_on_K(ctx, cfg.exhaustive_budget)))
    return checks


def gadget_checks(ctx: gd.GadgetContext, cfg: VerifyConfig) -> list[Check]:
    checks = []
    for alpha in range(1, ctx.d):
        for k in (1, 2):
            if _fits(ctx, k, cfg):
                r = gd.verify_level_polynomial(ctx, alpha, k, budget=cfg.exhaustive_budget, jobs=cfg.jobs)
                checks.append(_from_report(f"level polynomial q^{k} at level {alpha}", r))
    for alpha in range(1, ctx.d):
        for kind, build, m, arity in (("AND", gd.build_AND_gadget, 1, 1), ("AND", gd.build_AND_gadget, 2, 2),
                                      ("SAT", gd.build_SAT_gadget, 1, 3)):
            if not _fits(ctx, arity, cfg):
                continue
            fam = build(ctx, alpha, m)
            r = gd.verify_gadget(ctx, fam, "exhaustive", budget=cfg.exhaustive_budget, jobs=cfg.jobs)
            checks.append(_from_report(f"{kind}_{alpha}^({m}) exhaustive", r))
    for m in range(1, cfg.sampled_and_max + 1):
        fam = gd.build_AND_gadget(ctx, 1, m)
        r = gd.verify_gadget(ctx, fam, "sampled", seed=cfg.seed, trials=cfg.trials)
        checks.append(_from_report(f"AND_1^({m}) sampled", r))
    for m in (2, 3):
        fam = gd.build_SAT_gadget(ctx, 1, m)
        r = gd.verify_gadget(ctx, fam, "sampled", seed=cfg.seed, trials=cfg.trials)
        checks.append(_from_report(f"SAT_1^({m}) sampled", r))
    if _fits(ctx, 1, cfg):
        fam = gd.mutate_family(gd.build_AND_gadget(ctx, 1, 1), ctx.h[1], ctx.G0.identity)
        r = gd.verify_gadget(ctx, fam, "exhaustive", budget=cfg.exhaustive_budget)
        checks.append(Check("mutated AND_1^(1) is rejected", not r.passed, r.checked))
    n_len, ok = 0, True
    for alpha in range(1, ctx.d):
        for build in (gd.build_AND_gadget, gd.build_SAT_gadget):
            for m in (1, 2, 3):
                fam = build(ctx, alpha, m)
                try:
                    word = fam.polynomial.flatten()
                except CapExceeded:
                    continue
                n_len += 1
                ok &= len(word) == fam.declared_flat_length
    checks.append(Check("declared lengths match flattened words", ok, n_len))
    return checks


def reduction_checks(ctx: gd.GadgetContext, cfg: VerifyConfig) -> list[Check]:
    """Tiny formulas and graphs through reduce, brute force and lifting."""
    cases = [
        rd.CnfFormula.from_lists(1, [[1]]),
        rd.CnfFormula.from_lists(1, [[-1]]),
        rd.CnfFormula.from_lists(1, [[1], [-1]]),
        rd.CnfFormula.from_lists(2, [[1, 2], [-1, 2], [1, -2], [-1, -2]]),
        rd.Graph.of(2, [(0, 1)]),
        rd.Graph.of(3, [(0, 1), (1, 2)]),
        rd.Graph.of(3, [(0, 1), (1, 2), (0, 2)]),
    ]
    checks = []
    for src in cases:
        if isinstance(src, rd.CnfFormula):
            sat, eqv, _ = rd.reduce_sat(src, ctx)
            truth, _ = sv.sat_bruteforce(src)
            label = f"cnf {src.to_json()['clauses']}"
        else:
            sat, eqv, _ = rd.reduce_coloring(src, ctx)
            truth, _ = sv.coloring_bruteforce(src, ctx.C)
            label = f"graph {src.to_json()['edges']}"
        if not _fits(ctx, sat.arity, cfg):
            continue
        r1 = sv.polsat_bruteforce(sat, cfg.exhaustive_budget, cfg.jobs)
        r2 = sv.poleqv_bruteforce(eqv, cfg.exhaustive_budget, cfg.jobs)
        ok = (r1.verdict == sv.SAT_V) == truth and (r2.verdict == sv.HOLDS) == (not truth)
        if r1.witness is not None:
            rd.lift_witness(sat, r1.witness)
        if r2.witness is not None:
            rd.lift_witness(eqv, r2.witness)
        checks.append(Check(f"reduction agrees with oracle: {label}", ok, r1.assignments_tried + r2.assignments_tried,
                            {} if ok else {"oracle": truth, "polsat": r1.verdict, "poleqv": r2.verdict}))
    return checks


def run_verify(G: FiniteGroup, cfg: VerifyConfig | None = None) -> VerifySuiteReport:
    cfg = cfg or VerifyConfig()
    normals = st.all_normal_subgroups(G)
    checks = structure_checks(G, normals)
    checks += identity_checks(G, cfg)
    d = st.fitting_length(G)
    notes = []
    try:
        ctx = gd.prepare_context(G)
    except FittingLengthTooSmall:
        notes.append(f"gadget construction unavailable (d = {d} < 3)")
    else:
        checks += context_checks(ctx, cfg)
        checks += gadget_checks(ctx, cfg)
        checks += reduction_checks(ctx, cfg)
    return VerifySuiteReport(G.source, G.order, d, checks, notes)


def catalog_fitting_agreement(names, max_order: int = 72) -> list[tuple[str, bool]]:
    from .groups import builtin

    out = []
    for name in names:
        G = builtin(name)
        if G.order <= max_order:
            out.append((name, st.fitting_subgroup(G) == st.fitting_subgroup_by_lattice(G)))
    return out
