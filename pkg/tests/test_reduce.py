import itertools
import json
import types

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from fitgadget import errors, gadget as gd, reduce as rd, solve as sv


# DIMACS

def test_parse_cnf_comments_and_padding():
    text = "c hello\np cnf 3 2\n1 -2\n 3 0\n-1 0\n"
    phi = rd.parse_dimacs_cnf(text)
    assert phi.num_vars == 3 and phi.m == 2
    assert phi.clauses[0] == ((0, False), (1, True), (2, False))
    assert phi.clauses[1] == ((0, True),) * 3


def test_cnf_round_trip():
    phi = rd.CnfFormula.from_lists(4, [[1, -2, 3], [-4, 4, 1], [2]])
    assert rd.parse_dimacs_cnf(rd.format_dimacs_cnf(phi)) == phi


@pytest.mark.parametrize("text", [
    "1 2 0\n",
    "p cnf 2\n1 0\n",
    "p cnf 2 1\n1 3 0\n",
    "p cnf 2 2\n1 0\n",
    "p cnf 2 1\n1 2 -1 2 0\n",
    "p cnf 2 1\n1 x 0\n",
    "p sat 2 1\n1 0\n",
])
def test_cnf_rejects(text):
    with pytest.raises(errors.DimacsFormatError):
        rd.parse_dimacs_cnf(text)


def test_parse_graph_dedups():
    G = rd.parse_dimacs_graph("c x\np edge 3 3\ne 1 2\ne 2 1\ne 2 3\n")
    assert G.edges == ((0, 1), (1, 2))
    assert rd.parse_dimacs_graph(rd.format_dimacs_graph(G)) == G


@pytest.mark.parametrize("text", ["p edge 2 1\ne 1 1\n", "e 1 2\n", "p edge 2 1\ne 1 3\n", "p edge 2 1\nx 1 2\n"])
def test_graph_rejects(text):
    with pytest.raises(errors.DimacsFormatError):
        rd.parse_dimacs_graph(text)


def test_read_instance_file(tmp_path):
    (tmp_path / "a.cnf").write_text("p cnf 1 1\n1 0\n")
    (tmp_path / "b.col").write_text("p col 2 1\ne 1 2\n")
    (tmp_path / "c.txt").write_text("c nothing\n")
    assert isinstance(rd.read_instance_file(tmp_path / "a.cnf"), rd.CnfFormula)
    assert isinstance(rd.read_instance_file(tmp_path / "b.col"), rd.Graph)
    with pytest.raises(errors.DimacsFormatError):
        rd.read_instance_file(tmp_path / "c.txt")


# fixed scenarios

def _verdicts(sat, eqv):
    return sv.polsat_bruteforce(sat).verdict, sv.poleqv_bruteforce(eqv).verdict


def test_single_positive_clause(ctx):
    phi = rd.CnfFormula.from_lists(1, [[1, 1, 1]])
    sat, eqv, rep = rd.reduce_sat(phi, ctx)
    assert sat.arity == 1 and rep.m == 1
    r = sv.polsat_bruteforce(sat)
    assert r.verdict == sv.SAT_V
    assert rd.lift_witness(sat, r.witness) == [True]
    assert sat.holds_at(rd.canonical_assignment(sat, [True]))
    assert not sat.holds_at(rd.canonical_assignment(sat, [False]))


def test_contradiction(ctx):
    phi = rd.CnfFormula.from_lists(1, [[1], [-1]])
    sat, eqv, _ = rd.reduce_sat(phi, ctx)
    assert _verdicts(sat, eqv) == (sv.UNSAT_V, sv.HOLDS)


def test_triangle_not_two_colorable(ctx):
    assert ctx.C == 2
    g = rd.Graph.of(3, [(0, 1), (1, 2), (0, 2)])
    sat, eqv, _ = rd.reduce_coloring(g, ctx)
    assert _verdicts(sat, eqv) == (sv.UNSAT_V, sv.HOLDS)


def test_single_edge(ctx):
    g = rd.Graph.of(2, [(0, 1)])
    sat, eqv, _ = rd.reduce_coloring(g, ctx)
    r = sv.polsat_bruteforce(sat)
    assert r.verdict == sv.SAT_V
    col = rd.lift_witness(sat, r.witness)
    assert g.is_proper(col)
    assert sat.holds_at(rd.coloring_assignment(sat, [0, 1]))
    assert not sat.holds_at(rd.coloring_assignment(sat, [1, 1]))


def test_edge_order_does_not_change_verdicts(ctx):
    path = rd.Graph.of(3, [(0, 1), (1, 2)])
    polys = set()
    for order in itertools.permutations(path.edges):
        sat, eqv, _ = rd.reduce_coloring(path, ctx, order=order)
        polys.add(sat.polynomial.to_slp())
        assert _verdicts(sat, eqv) == (sv.SAT_V, sv.COUNTEREXAMPLE)
    assert len(polys) == 2
    with pytest.raises(errors.InputError):
        rd.reduce_coloring(path, ctx, order=[(0, 1)])


def test_edgeless_graph_is_constant(ctx):
    sat, eqv, rep = rd.reduce_coloring(rd.Graph.of(3, []), ctx)
    assert sat.polynomial.node_count == 1 and rep.flat_length == 1
    assert _verdicts(sat, eqv) == (sv.SAT_V, sv.COUNTEREXAMPLE)


def test_empty_formula_is_constant(ctx):
    sat, eqv, _ = rd.reduce_sat(rd.CnfFormula(2, ()), ctx)
    assert _verdicts(sat, eqv) == (sv.SAT_V, sv.COUNTEREXAMPLE)
    assert sv.sat_bruteforce(rd.CnfFormula(2, ()))[0]


def test_context_required():
    with pytest.raises(errors.ContextNotPrepared):
        rd.reduce_sat(rd.CnfFormula.from_lists(1, [[1]]), None)
    with pytest.raises(errors.ContextNotPrepared):
        rd.reduce_coloring(rd.Graph.of(2, [(0, 1)]), object())


def test_choose_pipeline(ctx):
    assert rd.choose_pipeline(ctx) == rd.SAT
    assert rd.choose_pipeline(types.SimpleNamespace(C=3)) == rd.COLORING


def test_lift_rejects_non_witness(ctx):
    sat, eqv, _ = rd.reduce_sat(rd.CnfFormula.from_lists(1, [[1]]), ctx)
    with pytest.raises(errors.WitnessInvalid):
        rd.lift_witness(sat, [ctx.G0.identity])
    with pytest.raises(errors.WitnessInvalid):
        rd.lift_witness(eqv, rd.canonical_assignment(eqv, [False]))


# property tests

@hst.composite
def formulas(draw, max_vars=3, max_clauses=3):
    n = draw(hst.integers(1, max_vars))
    m = draw(hst.integers(1, max_clauses))
    lit = hst.integers(1, n).flatmap(lambda v: hst.sampled_from([v, -v]))
    return rd.CnfFormula.from_lists(n, [draw(hst.lists(lit, min_size=1, max_size=3)) for _ in range(m)])


def _all_assignments(n_elems: int, arity: int) -> np.ndarray:
    t = np.arange(n_elems**arity)
    return (t[:, None] // n_elems ** np.arange(arity)[None, :]) % n_elems


@given(formulas(max_vars=2))
def test_sat_reduction_sound_and_complete(ctx, phi):
    sat, eqv, _ = rd.reduce_sat(phi, ctx)
    A = _all_assignments(ctx.G0.order, phi.num_vars)
    vals = sat.polynomial.evaluate_batch(A)
    # every group solution lifts to a satisfying boolean assignment
    for row in A[vals == sat.target]:
        assert phi.evaluate(rd.lift_witness(sat, row.tolist()))
    for row in A[vals != eqv.target][:50]:
        assert phi.evaluate(rd.lift_witness(eqv, row.tolist()))
    # every boolean solution has a group solution
    for bits in itertools.product([False, True], repeat=phi.num_vars):
        if phi.evaluate(bits):
            assert sat.holds_at(rd.canonical_assignment(sat, bits))
    truth = sv.sat_bruteforce(phi)[0]
    assert bool((vals == sat.target).any()) == truth
    assert bool((vals != eqv.target).any()) == truth


@given(formulas(max_vars=3))
def test_canonical_assignment_satisfies(ctx, phi):
    sat, _, _ = rd.reduce_sat(phi, ctx)
    for bits in itertools.product([False, True], repeat=phi.num_vars):
        assert sat.holds_at(rd.canonical_assignment(sat, bits)) == phi.evaluate(bits)


@hst.composite
def graphs(draw, max_vertices=3):
    n = draw(hst.integers(1, max_vertices))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return rd.Graph.of(n, draw(hst.lists(hst.sampled_from(pairs), max_size=3)) if pairs else [])


@given(graphs())
def test_coloring_reduction_matches_oracle(ctx, g):
    sat, eqv, _ = rd.reduce_coloring(g, ctx)
    A = _all_assignments(ctx.G0.order, g.num_vertices)
    vals = sat.polynomial.evaluate_batch(A)
    for row in A[vals == sat.target][:50]:
        assert g.is_proper(rd.lift_witness(sat, row.tolist()))
    for col in itertools.product(range(ctx.C), repeat=g.num_vertices):
        assert sat.holds_at(rd.coloring_assignment(sat, col)) == g.is_proper(col)
    truth = sv.coloring_bruteforce(g, ctx.C)[0]
    assert truth == sv.coloring_by_enumeration(g, ctx.C)
    assert bool((vals == sat.target).any()) == truth


@given(formulas(max_vars=4, max_clauses=6))
def test_length_accounting(ctx, phi):
    sat, _, rep = rd.reduce_sat(phi, ctx)
    fam = gd.build_SAT_gadget(ctx, 1, phi.m)
    weights = [1 if neg else 2 for cl in phi.clauses for _, neg in cl]
    assert rep.flat_length == sat.polynomial.flat_length() == fam.polynomial.flat_length(weights)
    assert rep.gadget_flat_length == fam.declared_flat_length


@pytest.mark.parametrize("m", [1, 2, 5, 10, 30])
def test_node_count_linear_ceiling(ctx, m):
    rng = np.random.default_rng(m)
    n = 4
    clauses = [[int(v) for v in rng.choice([-4, -3, -2, -1, 1, 2, 3, 4], 3)] for _ in range(m)]
    _, _, rep = rd.reduce_sat(rd.CnfFormula.from_lists(n, clauses), ctx)
    assert rep.dag_nodes <= 10 * m * ctx.w * ctx.d + 3 * n + ctx.G0.order


# bundles

def test_bundle_round_trip(ctx, tmp_path):
    phi = rd.CnfFormula.from_lists(2, [[1, 2], [-1]])
    sat, eqv, rep = rd.reduce_sat(phi, ctx)
    rd.write_bundle(tmp_path, sat, eqv, rep)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["eqv.json", "group.json", "polynomial.slp", "sat.json"]
    s2 = rd.read_bundle(tmp_path)
    e2 = rd.read_bundle(tmp_path / "eqv.json")
    assert s2.mode == rd.SATISFIABILITY and e2.mode == rd.IDENTITY
    assert s2.target == sat.target and e2.target == ctx.G0.identity
    A = _all_assignments(24, 2)
    assert (s2.polynomial.evaluate_batch(A) == sat.polynomial.evaluate_batch(A)).all()
    assert rd.source_of(s2) == phi
    w = sv.polsat_bruteforce(s2).witness
    assert phi.evaluate(rd.lift_witness(s2, w))
    manifest = json.loads((tmp_path / "sat.json").read_text())
    assert "wall_ms" not in manifest["report"]
    assert manifest["report"]["flat_length"] == str(rep.flat_length)


def test_bundle_bytes_deterministic(ctx, tmp_path):
    g = rd.Graph.of(3, [(0, 1), (1, 2)])
    for sub in ("a", "b"):
        sat, eqv, rep = rd.reduce_coloring(g, ctx)
        rd.write_bundle(tmp_path / sub, sat, eqv, rep)
    for name in ("group.json", "polynomial.slp", "sat.json", "eqv.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_read_bundle_errors(tmp_path):
    with pytest.raises(errors.InputError):
        rd.read_bundle(tmp_path)
