"""Compile 3-CNF formulas and graphs into equations over ``G0``.

A formula becomes ``SAT_1^(m)`` fed with one subterm per literal (``g x_k``
for ``X_k``, ``x_k`` for ``not X_k``); a graph becomes ``AND_1^(m)`` fed with
``x_u x_v^-1`` per edge. Both ask ``p = h_1`` (exists) and ``p = 1`` (for all).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ContextNotPrepared, DimacsFormatError, InputError, WitnessInvalid
from .gadget import GadgetContext, and_length, and_ref, sat_length, sat_ref
from .groups import FiniteGroup, export_group, read_group_file
from .poly import GroupPolynomial, PolyBuilder, format_slp, parse_slp

SATISFIABILITY = "SATISFIABILITY"
IDENTITY = "IDENTITY"
SAT, COLORING = "SAT", "COLORING"

Literal = tuple[int, bool]  # (variable id, negated)


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self):
        for cl in self.clauses:
            if len(cl) != 3:
                raise InputError("clauses must have exactly three literals")
            for v, _ in cl:
                if not 0 <= v < self.num_vars:
                    raise InputError(f"variable {v} outside 0..{self.num_vars - 1}")

    @classmethod
    def from_lists(cls, num_vars: int, clauses) -> "CnfFormula":
        """From DIMACS-style signed 1-based literal lists; short clauses repeat their last literal."""
        out = []
        for cl in clauses:
            cl = list(cl)
            if not cl or len(cl) > 3 or 0 in cl:
                raise InputError(f"clause {cl} is not a 1..3 literal clause")
            cl += [cl[-1]] * (3 - len(cl))
            out.append(tuple((abs(l) - 1, l < 0) for l in cl))
        return cls(num_vars, tuple(out))

    @property
    def m(self) -> int:
        return len(self.clauses)

    def evaluate(self, assignment) -> bool:
        return all(any(bool(assignment[v]) != neg for v, neg in cl) for cl in self.clauses)

    def to_json(self) -> dict:
        return {"num_vars": self.num_vars,
                "clauses": [[(-(v + 1) if neg else v + 1) for v, neg in cl] for cl in self.clauses]}


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise InputError(f"loop at vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise InputError(f"edge ({u}, {v}) outside 0..{self.num_vertices - 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InputError(f"duplicate edge {key}")
            seen.add(key)

    @classmethod
    def of(cls, num_vertices: int, edges) -> "Graph":
        """Normalize to sorted ``(min, max)`` pairs, dropping repeats."""
        es = sorted({(min(u, v), max(u, v)) for u, v in edges})
        return cls(num_vertices, tuple(es))

    def is_proper(self, coloring) -> bool:
        return all(coloring[u] != coloring[v] for u, v in self.edges)

    def to_json(self) -> dict:
        return {"num_vertices": self.num_vertices, "edges": [[u + 1, v + 1] for u, v in self.edges]}


# DIMACS

def _lines(text: str):
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        yield line


def parse_dimacs_cnf(text: str) -> CnfFormula:
    header = None
    nums: list[int] = []
    for line in _lines(text):
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsFormatError(f"bad header {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise DimacsFormatError("clause before 'p cnf' header")
        try:
            nums.extend(int(t) for t in line.split())
        except ValueError:
            raise DimacsFormatError(f"non-integer token in {line!r}") from None
    if header is None:
        raise DimacsFormatError("missing 'p cnf' header")
    n, m = header
    clauses, cur = [], []
    for t in nums:
        if t == 0:
            clauses.append(cur)
            cur = []
        else:
            if abs(t) > n:
                raise DimacsFormatError(f"literal {t} exceeds {n} variables")
            cur.append(t)
    if cur:
        clauses.append(cur)
    if len(clauses) != m:
        raise DimacsFormatError(f"header declares {m} clauses, found {len(clauses)}")
    try:
        return CnfFormula.from_lists(n, clauses)
    except InputError as exc:
        raise DimacsFormatError(str(exc)) from None


def parse_dimacs_graph(text: str) -> Graph:
    header = None
    edges = []
    for line in _lines(text):
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise DimacsFormatError(f"bad header {line!r}")
            header = (int(parts[2]), int(parts[3]))
        elif parts[0] == "e":
            if header is None or len(parts) != 3:
                raise DimacsFormatError(f"bad edge line {line!r}")
            u, v = int(parts[1]) - 1, int(parts[2]) - 1
            edges.append((u, v))
        else:
            raise DimacsFormatError(f"unexpected line {line!r}")
    if header is None:
        raise DimacsFormatError("missing 'p edge' header")
    try:
        return Graph.of(header[0], edges)
    except InputError as exc:
        raise DimacsFormatError(str(exc)) from None


def format_dimacs_cnf(phi: CnfFormula) -> str:
    lines = [f"p cnf {phi.num_vars} {phi.m}"]
    lines += [" ".join(map(str, cl)) + " 0" for cl in phi.to_json()["clauses"]]
    return "\n".join(lines) + "\n"


def format_dimacs_graph(G: Graph) -> str:
    lines = [f"p edge {G.num_vertices} {len(G.edges)}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in G.edges]
    return "\n".join(lines) + "\n"


def read_instance_file(path) -> CnfFormula | Graph:
    text = Path(path).read_text()
    for line in _lines(text):
        if line.startswith("p"):
            kind = line.split()[1] if len(line.split()) > 1 else ""
            return parse_dimacs_cnf(text) if kind == "cnf" else parse_dimacs_graph(text)
    raise DimacsFormatError(f"{path}: no header line")


# instances

@dataclass(frozen=True, eq=False)
class EquationInstance:
    group: FiniteGroup
    polynomial: GroupPolynomial
    target: int
    mode: str
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def arity(self) -> int:
        return self.polynomial.arity

    def holds_at(self, assignment) -> bool:
        return self.polynomial.evaluate(assignment) == self.target


@dataclass(frozen=True)
class ReductionReport:
    m: int
    flat_length: int
    gadget_flat_length: int
    dag_nodes: int
    pipeline: str
    recommended_pipeline: str
    C: int
    wall_ms: float | None = None

    def to_json(self, timings: bool = False) -> dict:
        out = {
            "m": self.m,
            "flat_length": str(self.flat_length),
            "log2_flat_length": round(float(np.log2(self.flat_length)), 6),
            "gadget_flat_length": str(self.gadget_flat_length),
            "dag_nodes": self.dag_nodes,
            "pipeline": self.pipeline,
            "recommended_pipeline": self.recommended_pipeline,
            "C": self.C,
        }
        if timings and self.wall_ms is not None:
            out["wall_ms"] = round(self.wall_ms, 3)
        return out


def choose_pipeline(ctx: GadgetContext) -> str:
    """Coloring only carries hardness for ``C >= 3``; 2-coloring is easy."""
    return COLORING if ctx.C >= 3 else SAT


def _require(ctx) -> None:
    if not isinstance(ctx, GadgetContext):
        raise ContextNotPrepared("reduction needs a prepared GadgetContext")


def _provenance(ctx: GadgetContext, kind: str, source: dict) -> dict:
    return {"kind": kind, "source": source, "context_fingerprint": ctx.fingerprint(),
            "H": list(ctx.H), "g": ctx.g, "h1": ctx.h[1]}


def _instances(ctx, p, prov):
    sat = EquationInstance(ctx.G0, p, ctx.h[1], SATISFIABILITY, prov)
    eqv = EquationInstance(ctx.G0, p, ctx.G0.identity, IDENTITY, prov)
    return sat, eqv


def reduce_sat(phi: CnfFormula, ctx: GadgetContext):
    """Return ``(instance_sat, instance_eqv, report)`` for a 3-CNF."""
    _require(ctx)
    t0 = time.perf_counter()
    b = PolyBuilder(ctx.G0)
    g = b.const(ctx.g)

    def lit(v: int, neg: bool) -> int:
        x = b.var(v)
        return x if neg else b.mul(g, x)

    if phi.m == 0:
        root = b.const(ctx.h[1])
        gadget_len = 1
    else:
        triples = [tuple(lit(v, neg) for v, neg in cl) for cl in phi.clauses]
        root = sat_ref(b, ctx, 1, triples)
        gadget_len = sat_length(ctx.d, ctx.w, 1, phi.m)
    p = b.build(root, phi.num_vars)
    report = ReductionReport(phi.m, p.flat_length(), gadget_len, p.node_count, SAT,
                             choose_pipeline(ctx), ctx.C, (time.perf_counter() - t0) * 1e3)
    return (*_instances(ctx, p, _provenance(ctx, "cnf", phi.to_json())), report)


def reduce_coloring(graph: Graph, ctx: GadgetContext, order=None):
    """Return ``(instance_sat, instance_eqv, report)``; colors are cosets of ``H``.

    Edges are fed in ascending order unless ``order`` lists them explicitly.
    """
    _require(ctx)
    edges = sorted(graph.edges)
    if order is not None:
        edges = [(min(u, v), max(u, v)) for u, v in order]
        if sorted(edges) != sorted(graph.edges):
            raise InputError("edge order must list every edge exactly once")
    t0 = time.perf_counter()
    b = PolyBuilder(ctx.G0)
    if not graph.edges:
        root = b.const(ctx.h[1])
        gadget_len = 1
    else:
        inputs = [b.mul(b.var(u), b.inv(b.var(v))) for u, v in edges]
        root = and_ref(b, ctx, 1, inputs)
        gadget_len = and_length(ctx.d, ctx.w, 1, len(inputs))
    p = b.build(root, graph.num_vertices)
    report = ReductionReport(len(graph.edges), p.flat_length(), gadget_len, p.node_count, COLORING,
                             choose_pipeline(ctx), ctx.C, (time.perf_counter() - t0) * 1e3)
    return (*_instances(ctx, p, _provenance(ctx, "graph", graph.to_json())), report)


def source_of(instance: EquationInstance) -> CnfFormula | Graph:
    prov = instance.provenance
    src = prov["source"]
    if prov["kind"] == "cnf":
        return CnfFormula.from_lists(src["num_vars"], src["clauses"])
    return Graph.of(src["num_vertices"], [(u - 1, v - 1) for u, v in src["edges"]])


def canonical_assignment(instance: EquationInstance, boolean) -> list[int]:
    """Group assignment for a boolean one: ``x_k = g`` when ``X_k`` is true
    (``g^-1`` if ``g^2`` is not in ``H``), else the identity."""
    G = instance.group
    prov = instance.provenance
    H = set(prov["H"])
    g = prov["g"]
    true_val = g if int(G.mul[g, g]) in H else int(G.inv[g])
    return [true_val if b else G.identity for b in boolean]


def coloring_assignment(instance: EquationInstance, coloring) -> list[int]:
    """Color ``c`` goes to a representative of the ``c``-th coset of ``H``."""
    reps = _coset_reps(instance)
    return [reps[c] for c in coloring]


def _coset_reps(instance: EquationInstance) -> list[int]:
    G = instance.group
    H = np.array(instance.provenance["H"])
    reps = sorted({int(G.mul[x, H].min()) for x in range(G.order)})
    return reps


def lift_witness(instance: EquationInstance, assignment) -> list[bool] | list[int]:
    """Boolean assignment (``X_k`` true iff ``x_k`` not in H) or coloring
    (coset index of ``x_v``), re-validated against the source instance."""
    G = instance.group
    value = instance.polynomial.evaluate(list(assignment))
    if instance.mode == SATISFIABILITY and value != instance.target:
        raise WitnessInvalid("assignment does not satisfy the equation")
    if instance.mode == IDENTITY and value == G.identity:
        raise WitnessInvalid("assignment does not violate the identity")
    src = source_of(instance)
    H = set(instance.provenance["H"])
    if isinstance(src, CnfFormula):
        lifted = [x not in H for x in assignment]
        if not src.evaluate(lifted):
            raise WitnessInvalid("lifted boolean assignment does not satisfy the formula")
        return lifted
    reps = _coset_reps(instance)
    Harr = np.array(instance.provenance["H"])
    coloring = [reps.index(int(G.mul[x, Harr].min())) for x in assignment]
    if not src.is_proper(coloring):
        raise WitnessInvalid("lifted coloring is not proper")
    return coloring


# bundles

def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_bundle(directory, sat: EquationInstance, eqv: EquationInstance, report: ReductionReport,
                 timings: bool = False) -> list[Path]:
    """Write ``group.json``, ``polynomial.slp``, ``sat.json`` and ``eqv.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "group.json": _dump(export_group(sat.group, form="table")),
        "polynomial.slp": format_slp(sat.polynomial),
    }
    for name, inst in (("sat.json", sat), ("eqv.json", eqv)):
        files[name] = _dump({
            "mode": inst.mode,
            "target": inst.target,
            "num_variables": inst.arity,
            "group": "group.json",
            "polynomial": "polynomial.slp",
            "provenance": inst.provenance,
            "report": report.to_json(timings),
        })
    paths = []
    for name, text in files.items():
        (out / name).write_text(text)
        paths.append(out / name)
    return paths


def read_bundle(path) -> EquationInstance:
    """Load one manifest (``sat.json`` / ``eqv.json``), or ``sat.json`` of a bundle directory."""
    p = Path(path)
    if p.is_dir():
        p = p / "sat.json"
    try:
        manifest = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{p}: cannot read manifest ({exc})") from None
    G = read_group_file(p.parent / manifest.get("group", "group.json"))
    poly = parse_slp((p.parent / manifest.get("polynomial", "polynomial.slp")).read_text(), G,
                     arity=int(manifest["num_variables"]))
    mode = manifest["mode"]
    if mode not in (SATISFIABILITY, IDENTITY):
        raise InputError(f"unknown mode {mode!r}")
    return EquationInstance(G, poly, G.check(int(manifest["target"])), mode, manifest.get("provenance", {}))
