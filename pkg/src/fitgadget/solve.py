"""Brute-force engines used as ground truth.

Assignments are enumerated with variable 0 as the fastest digit and elements
in index order; "first" always means first in that order, whatever the
number of workers.
"""
from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import BudgetExceeded, ContractViolation, InputError
from .poly import GroupPolynomial
from .reduce import IDENTITY, SATISFIABILITY, CnfFormula, EquationInstance, Graph

DEFAULT_BUDGET = 10**8
CHUNK = 1 << 15

SAT_V, UNSAT_V = "SAT", "UNSAT"
HOLDS, COUNTEREXAMPLE = "HOLDS_IDENTICALLY", "COUNTEREXAMPLE"


@dataclass(frozen=True)
class SolveResult:
    verdict: str
    witness: tuple[int, ...] | None
    assignments_tried: int
    millis: float = 0.0

    def to_json(self, timings: bool = True) -> dict:
        out = {"verdict": self.verdict,
               "witness": list(self.witness) if self.witness is not None else None,
               "assignments_tried": self.assignments_tried}
        if timings:
            out["millis"] = round(self.millis, 3)
        return out


def _total(p: GroupPolynomial, budget: int) -> int:
    total = p.group.order ** p.arity
    if total > budget:
        raise BudgetExceeded(f"{p.group.order}^{p.arity} assignments exceed budget {budget}")
    return total


def _decode(t: int, n: int, arity: int) -> tuple[int, ...]:
    return tuple((t // n**j) % n for j in range(arity))


def _scan_plain(p: GroupPolynomial, hit, lo: int, hi: int, stop) -> int | None:
    n, r = p.group.order, p.arity
    powers = n ** np.arange(r, dtype=np.int64)
    for s in range(lo, hi, CHUNK):
        if stop(s):
            return None
        t = np.arange(s, min(hi, s + CHUNK), dtype=np.int64)
        A = (t[:, None] // powers[None, :]) % n
        found = np.flatnonzero(hit(p.evaluate_batch(A)))
        if len(found):
            return int(t[found[0]])
    return None


def _scan_pruned(p: GroupPolynomial, hit, lo: int, hi: int, stop) -> int | None:
    """Low variables as arrays, high ones as scalars, so subterms over the high
    variables are evaluated once per outer assignment."""
    n, r = p.group.order, p.arity
    inner = 0
    while inner < r and n ** (inner + 1) <= CHUNK:
        inner += 1
    block = n**inner
    powers = n ** np.arange(inner, dtype=np.int64)
    t_in = np.arange(block, dtype=np.int64)
    cols_in = [(t_in // pw) % n for pw in powers]
    for outer in range(lo // block, -(-hi // block)):
        base = outer * block
        if stop(base):
            return None
        cols = list(cols_in) + [(outer // n**j) % n for j in range(r - inner)]
        vals = np.broadcast_to(p.evaluate_columns(cols), (block,))
        found = np.flatnonzero(hit(vals))
        found = found[(found + base >= lo) & (found + base < hi)]
        if len(found):
            return int(base + found[0])
    return None


def first_hit(p: GroupPolynomial, hit, budget: int = DEFAULT_BUDGET, jobs: int = 1,
              pruned: bool = False) -> tuple[int | None, int]:
    """Least assignment index where ``hit(value)`` holds, and the total count.

    The index range is split into contiguous blocks (high-order digits) across
    ``jobs`` threads; a worker gives up once a lower block has a hit.
    """
    total = _total(p, budget)
    scan = _scan_pruned if pruned else _scan_plain
    jobs = max(1, min(jobs, total))
    if jobs == 1:
        return scan(p, hit, 0, total, lambda s: False), total
    bounds = [total * i // jobs for i in range(jobs + 1)]
    best = [total]
    lock = threading.Lock()

    def work(i: int):
        res = scan(p, hit, bounds[i], bounds[i + 1], lambda s: s > best[0])
        if res is not None:
            with lock:
                best[0] = min(best[0], res)
        return res

    with ThreadPoolExecutor(jobs) as ex:
        results = list(ex.map(work, range(jobs)))
    hits = [r for r in results if r is not None]
    return (min(hits) if hits else None), total


def polsat_bruteforce(instance: EquationInstance, budget: int = DEFAULT_BUDGET, jobs: int = 1,
                      pruned: bool = False) -> SolveResult:
    if instance.mode != SATISFIABILITY:
        raise InputError("polsat needs a SATISFIABILITY instance")
    t0 = time.perf_counter()
    p = instance.polynomial
    t, total = first_hit(p, lambda v: v == instance.target, budget, jobs, pruned)
    ms = (time.perf_counter() - t0) * 1e3
    if t is None:
        return SolveResult(UNSAT_V, None, total, ms)
    w = _decode(t, p.group.order, p.arity)
    if p.evaluate(list(w)) != instance.target:
        raise ContractViolation("witness does not re-evaluate to the target")
    return SolveResult(SAT_V, w, t + 1, ms)


def poleqv_bruteforce(instance: EquationInstance, budget: int = DEFAULT_BUDGET, jobs: int = 1,
                      pruned: bool = False) -> SolveResult:
    if instance.mode != IDENTITY:
        raise InputError("poleqv needs an IDENTITY instance")
    t0 = time.perf_counter()
    p = instance.polynomial
    t, total = first_hit(p, lambda v: v != instance.target, budget, jobs, pruned)
    ms = (time.perf_counter() - t0) * 1e3
    if t is None:
        return SolveResult(HOLDS, None, total, ms)
    w = _decode(t, p.group.order, p.arity)
    if p.evaluate(list(w)) == instance.target:
        raise ContractViolation("counterexample re-evaluates to the target")
    return SolveResult(COUNTEREXAMPLE, w, t + 1, ms)


def solve(instance: EquationInstance, **kw) -> SolveResult:
    engine = polsat_bruteforce if instance.mode == SATISFIABILITY else poleqv_bruteforce
    return engine(instance, **kw)


def polynomial_image(p: GroupPolynomial, budget: int = DEFAULT_BUDGET) -> set[int]:
    _total(p, budget)
    seen = np.zeros(p.group.order, dtype=bool)
    first_hit(p, lambda v: _mark(seen, v), budget)
    return set(np.flatnonzero(seen).tolist())


def _mark(seen: np.ndarray, v: np.ndarray) -> np.ndarray:
    seen[v] = True
    return np.zeros(len(v), dtype=bool)


# boolean oracles

def sat_bruteforce(phi: CnfFormula, max_vars: int = 30) -> tuple[bool, tuple[bool, ...] | None]:
    """Truth-table search; the witness is the first satisfying row with X_1 fastest."""
    if phi.num_vars > max_vars:
        raise BudgetExceeded(f"{phi.num_vars} variables exceed {max_vars}")
    if phi.m == 0:
        return True, tuple(False for _ in range(phi.num_vars))
    n = phi.num_vars
    lits = np.array([[v for v, _ in cl] for cl in phi.clauses])
    negs = np.array([[neg for _, neg in cl] for cl in phi.clauses])
    for s in range(0, 2**n, CHUNK):
        t = np.arange(s, min(2**n, s + CHUNK), dtype=np.int64)
        bits = ((t[:, None] >> np.arange(n)) & 1).astype(bool)
        vals = bits[:, lits] != negs[None, :, :]
        ok = vals.any(axis=2).all(axis=1)
        if ok.any():
            return True, tuple(bool(b) for b in bits[np.flatnonzero(ok)[0]])
    return False, None


def coloring_bruteforce(graph: Graph, colors: int, max_vertices: int = 20) -> tuple[bool, tuple[int, ...] | None]:
    """Backtracking over vertices in index order; the witness is the first proper coloring found."""
    if graph.num_vertices > max_vertices:
        raise BudgetExceeded(f"{graph.num_vertices} vertices exceed {max_vertices}")
    nbrs: list[list[int]] = [[] for _ in range(graph.num_vertices)]
    for u, v in graph.edges:
        nbrs[max(u, v)].append(min(u, v))
    col = [-1] * graph.num_vertices

    def go(v: int) -> bool:
        if v == graph.num_vertices:
            return True
        for c in range(colors):
            if all(col[u] != c for u in nbrs[v]):
                col[v] = c
                if go(v + 1):
                    return True
        col[v] = -1
        return False

    if colors < 1:
        return graph.num_vertices == 0, (() if graph.num_vertices == 0 else None)
    if go(0):
        return True, tuple(col)
    return False, None


def coloring_by_enumeration(graph: Graph, colors: int) -> bool:
    """Plain enumeration of all colorings; a second oracle for tiny graphs."""
    return any(graph.is_proper(c) for c in product(range(colors), repeat=graph.num_vertices))
