"""Conjunction-like commutator gadgets over a finite solvable group.

``prepare_context`` restricts to the inducible subgroup ``G0`` with abelian top
Fitting quotient, picks ``K``, ``K0`` and ``H``, the constants ``a`` and ``g``,
and the chain ``h_1, ..., h_d``. The AND/SAT families built from a context map
the H-membership pattern of their inputs onto the two cosets ``h_alpha U`` and
``U`` of ``U = U_{alpha-1}``; ``verify_gadget`` checks that by evaluation.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import structure as st
from .errors import (
    BudgetExceeded,
    CentralizerIsWholeGroup,
    ContractViolation,
    FittingLengthTooSmall,
    LevelOutOfRange,
    NoCandidate,
    NonUniqueMaximal,
    NoWitness,
)
from .groups import FiniteGroup, iterated_commutator, quotient_group, subgroup_group
from .poly import GroupPolynomial, PolyBuilder
from .structure import Subgroup

log = logging.getLogger(__name__)

DEFAULT_SEED = 0xF177
DEFAULT_EXHAUSTIVE_BUDGET = 10**6
DEFAULT_TRIALS = 1000
MAX_ENUMERATED_PATTERNS = 4096


class RestrictedGroup(NamedTuple):
    group: FiniteGroup
    embedding: np.ndarray  # G0 index -> index in the input group
    m_index: int


def restrict_to_G0(G: FiniteGroup) -> RestrictedGroup:
    """``G0 = gamma_m(G)`` for the largest ``m`` with ``gamma_m(G)`` not inside ``U_{d-1}(G)``."""
    U = st.upper_fitting_series(G)
    d = U.fitting_length
    if d < 3:
        raise FittingLengthTooSmall(f"{G!r} has Fitting length {d}; gadgets need d >= 3")
    lcs = st.lower_central_series(G)
    top = U[d - 1]
    m = max(i for i, gam in enumerate(lcs.terms) if not gam <= top)
    G0, emb = subgroup_group(G, lcs.terms[m])
    U0 = st.upper_fitting_series(G0)
    if U0.fitting_length != d:
        raise ContractViolation("restriction changed the Fitting length")
    if not st.commutator_set_closure(G0, range(G0.order), range(G0.order)) <= U0[d - 1]:
        raise ContractViolation("G0 / U_{d-1}(G0) is not abelian")
    return RestrictedGroup(G0, emb, m)


def choose_K(G0: FiniteGroup, normals: list[Subgroup], d: int) -> Subgroup:
    """Inclusion-minimal normal ``K`` with ``[K, G0] = K`` and Fitting length ``d - 1``."""
    W = st.whole(G0)
    cands = [
        N for N in normals
        if st.commutator_set_closure(G0, N, W) == N
        and st.subgroup_fitting_series(G0, N).fitting_length == d - 1
    ]
    minimal = [N for N in cands if not any(M < N for M in cands)]
    if not minimal:
        raise NoCandidate("no normal subgroup K with [K, G] = K and FitL(K) = d - 1")
    return min(minimal, key=Subgroup.sort_key)


def maximal_normal_below(normals: list[Subgroup], K: Subgroup) -> list[Subgroup]:
    below = [N for N in normals if N < K]
    return [N for N in below if not any(N < M for M in below)]


def compute_K0_and_H(G0: FiniteGroup, K: Subgroup, normals: list[Subgroup]) -> tuple[Subgroup, Subgroup]:
    tops = maximal_normal_below(normals, K)
    if len(tops) != 1:
        raise NonUniqueMaximal(f"{len(tops)} maximal normal subgroups below K")
    K0 = tops[0]
    H = st.centralizer_mod(G0, K, K0)
    if len(H) == G0.order:
        raise CentralizerIsWholeGroup("[K, G0] <= K0")
    return K0, H


@dataclass(frozen=True)
class PhiReport:
    is_homomorphism: bool
    kernel: Subgroup
    is_bijective_on_quotient: bool
    injective_on_K: bool
    # coset representative (mod K0) of [x, g] for each x in K, in K's index order
    table: tuple[int, ...]


def phi_analysis(G: FiniteGroup, K: Subgroup, K0: Subgroup, g: int) -> PhiReport:
    """Tabulate ``x -> [x, g] K0`` on ``K``."""
    k = np.array(K.elements)
    k0 = np.array(K0.elements)
    rep = np.full(G.order, -1, dtype=np.int64)
    rep[k] = G.mul[np.ix_(k, k0)].min(axis=1)
    img = G.comm[k, g]
    phi = rep[img]
    if (phi < 0).any():
        raise ContractViolation("[x, g] left K")
    # phi(xy) against phi(x) phi(y), all in K/K0
    xy = G.mul[np.ix_(k, k)]
    lhs = rep[G.comm[xy, g]]
    rhs = rep[G.mul[img[:, None], img[None, :]]]
    is_hom = bool(np.array_equal(lhs, rhs))
    kernel = Subgroup.of(k[phi == rep[G.identity]])
    n_cosets = len(K) // len(K0)
    bij = len(np.unique(phi)) == n_cosets
    inj = len(np.unique(img)) == len(K)
    return PhiReport(is_hom, kernel, bool(bij), bool(inj), tuple(int(v) for v in phi))


def _gamma_depths(Q: FiniteGroup, N: Subgroup) -> np.ndarray:
    """For each element of ``Q``: largest ``j`` with it in ``gamma_j(N)``; -1 outside ``N``."""
    depth = np.full(Q.order, -1, dtype=np.int64)
    cur, j = N, 0
    while True:
        depth[list(cur)] = j
        nxt = st.commutator_set_closure(Q, cur, N)
        if nxt == cur:
            break
        cur, j = nxt, j + 1
    return depth


@dataclass(frozen=True)
class DescentStep:
    h: int
    beta: int
    quotient_omega: int


def descent_step(G0: FiniteGroup, U: st.FittingSeries, omega: int, alpha: int, h_next: int) -> DescentStep:
    """Given ``h_{alpha+1}`` pick ``h_alpha``: in ``G0/U_{alpha-1}``, maximize ``beta``
    with ``[a, omega h_{alpha+1}]`` in ``gamma_beta(U_alpha) \\ {1}``."""
    Q, proj = quotient_group(G0, U[alpha - 1])
    Ubar = Subgroup.of(proj[list(U[alpha])])
    depth = _gamma_depths(Q, Ubar)
    hb = int(proj[h_next])
    vals = np.arange(Q.order)
    for _ in range(omega):
        vals = Q.comm[vals, hb]
    ok = (vals != Q.identity) & (depth[vals] >= 0)
    if not ok.any():
        raise NoWitness(f"no element with a nontrivial {omega}-fold commutator at level {alpha}")
    d = np.where(ok, depth[vals], -1)
    abar = int(np.flatnonzero(d == d.max())[0])
    a = int(np.flatnonzero(proj == abar)[0])
    h = iterated_commutator(G0, a, h_next, omega)
    if proj[h] != vals[abar]:
        raise ContractViolation("quotient commutator does not lift")
    q_omega = st.compute_omega(Q).omega
    if q_omega > omega:
        log.warning("quotient omega %d exceeds ambient omega %d at level %d", q_omega, omega, alpha)
    return DescentStep(h, int(d.max()), q_omega)


@dataclass(eq=False)
class GadgetContext:
    G: FiniteGroup
    G0: FiniteGroup
    embedding: np.ndarray
    m_index: int
    d: int
    U: st.FittingSeries
    omega: st.OmegaData
    normals: list[Subgroup]
    K: Subgroup
    K0: Subgroup
    H: Subgroup
    a: int
    g: int
    h: dict[int, int]  # level alpha -> h_alpha, alpha = 1..d
    M: Subgroup  # [K0, omega G0]
    UK: st.FittingSeries  # upper Fitting series of K, inside G0
    betas: dict[int, int] = field(default_factory=dict)
    quotient_omegas: dict[int, int] = field(default_factory=dict)

    @property
    def w(self) -> int:
        return self.omega.omega

    @property
    def C(self) -> int:
        return self.G0.order // len(self.H)

    def in_H(self) -> np.ndarray:
        return self.H.mask(self.G0.order)

    def phi(self, g: int) -> PhiReport:
        return phi_analysis(self.G0, self.K, self.K0, g)

    def fingerprint(self) -> str:
        hsh = hashlib.sha256(self.G0.table_fingerprint())
        hsh.update(json.dumps(self._choices(), sort_keys=True).encode())
        return hsh.hexdigest()[:16]

    def _choices(self) -> dict:
        return {
            "K": list(self.K), "K0": list(self.K0), "H": list(self.H),
            "a": self.a, "g": self.g, "h": {str(k): v for k, v in sorted(self.h.items())},
            "omega": self.w,
        }

    def to_json(self) -> dict:
        out = {
            "G0_order": self.G0.order,
            "G0_embedding": [int(x) for x in self.embedding],
            "m_index": self.m_index,
            "fitting_length": self.d,
            "U": [list(U) for U in self.U.terms],
            "omega": self.omega.to_json(),
            "C": self.C,
            "M": list(self.M),
            "betas": {str(k): v for k, v in sorted(self.betas.items())},
            "quotient_omegas": {str(k): v for k, v in sorted(self.quotient_omegas.items())},
            "fingerprint": self.fingerprint(),
        }
        out.update(self._choices())
        return out

    def invariants(self) -> list[tuple[str, bool]]:
        G0, U, d = self.G0, self.U, self.d
        W = st.whole(G0)
        below_K = [N for N in self.normals if self.K0 < N < self.K]
        checks = [
            ("d >= 3", d >= 3),
            ("G0/U_{d-1} abelian", st.commutator_set_closure(G0, W, W) <= U[d - 1]),
            ("[K, G0] = K", st.commutator_set_closure(G0, self.K, W) == self.K),
            ("FitL(K) = d-1", self.UK.fitting_length == d - 1),
            ("K0 < K maximal", self.K0 < self.K and not below_K),
            ("U_{d-1} <= H < G0", U[d - 1] <= self.H and len(self.H) < G0.order),
            ("K/K0 abelian", st.commutator_set_closure(G0, self.K, self.K) <= self.K0),
            ("[K0, omega G0] <= U_{d-2}(K)", self.M <= self.UK[d - 2]),
            ("a in K \\ K0", self.a in self.K and self.a not in self.K0),
            ("g in G0 \\ H", self.g not in self.H),
            ("h_1 != 1", self.h[1] != G0.identity),
        ]
        for alpha in range(1, d + 1):
            h = self.h[alpha]
            checks.append((f"h_{alpha} in U_{alpha} \\ U_{alpha - 1}", h in U[alpha] and h not in U[alpha - 1]))
        return checks


def derive_h_chain(G0: FiniteGroup, U: st.FittingSeries, omega: int, K: Subgroup, K0: Subgroup,
                   H: Subgroup) -> tuple[int, int, dict[int, int], dict[int, int], dict[int, int]]:
    """Return ``(a, g, h, betas, quotient_omegas)``.

    ``a`` and ``g`` are the smallest indices in ``K \\ K0`` and ``G0 \\ H``;
    ``h_{d-1} = [a, omega g]``, ``h_d`` is the smallest index outside ``U_{d-1}``,
    and lower levels come from :func:`descent_step`.
    """
    d = U.fitting_length
    a = min(x for x in K if x not in K0)
    g = min(x for x in range(G0.order) if x not in H)
    h = {d - 1: iterated_commutator(G0, a, g, omega)}
    if h[d - 1] in U[d - 2]:
        raise NoWitness("[a, omega g] fell into U_{d-2}")
    h[d] = min(x for x in range(G0.order) if x not in U[d - 1])
    betas, qomegas = {}, {}
    for alpha in range(d - 2, 0, -1):
        step = descent_step(G0, U, omega, alpha, h[alpha + 1])
        h[alpha] = step.h
        betas[alpha] = step.beta
        qomegas[alpha] = step.quotient_omega
        if not (h[alpha] in U[alpha] and h[alpha] not in U[alpha - 1]):
            raise NoWitness(f"h_{alpha} not in U_{alpha} \\ U_{alpha - 1}")
        fixed = iterated_commutator(G0, h[alpha], h[alpha + 1], omega)
        Q, proj = quotient_group(G0, U[alpha - 1])
        if proj[fixed] != proj[h[alpha]]:
            raise ContractViolation(f"h_{alpha} is not fixed by [-, omega h_{alpha + 1}] mod U_{alpha - 1}")
    return a, g, h, betas, qomegas


def prepare_context(G: FiniteGroup) -> GadgetContext:
    """Run the whole construction and assert every context invariant."""
    R = restrict_to_G0(G)
    G0 = R.group
    U = st.upper_fitting_series(G0)
    d = U.fitting_length
    normals = st.all_normal_subgroups(G0)
    om = st.compute_omega(G0, normals)
    K = choose_K(G0, normals, d)
    K0, H = compute_K0_and_H(G0, K, normals)
    M = K0
    for _ in range(om.omega):
        M = st.commutator_set_closure(G0, M, st.whole(G0))
    UK = st.subgroup_fitting_series(G0, K)
    a, g, h, betas, qom = derive_h_chain(G0, U, om.omega, K, K0, H)
    ctx = GadgetContext(G, G0, R.embedding, R.m_index, d, U, om, normals, K, K0, H, a, g, h, M, UK, betas, qom)
    bad = [name for name, ok in ctx.invariants() if not ok]
    if bad:
        raise ContractViolation(f"context invariants failed: {bad}")
    return ctx


# inducibility

def inducibility_witness(G: FiniteGroup, j: int) -> GroupPolynomial:
    """Polynomial with image ``gamma_j(G)``: a variable for ``j = 0``, then
    ``prod_{i=1}^{|G|} [p_j(fresh vars), y_i]``."""
    b = PolyBuilder(G)
    counter = [0]

    def fresh() -> int:
        counter[0] += 1
        return b.var(counter[0] - 1)

    def build(level: int) -> int:
        if level == 0:
            return fresh()
        factors = []
        for _ in range(G.order):
            inner = build(level - 1)
            factors.append(b.commutator(inner, fresh()))
        return b.product(factors)

    root = build(j)
    return b.build(root, counter[0])


def witness_arity(order: int, j: int) -> int:
    v = 1
    for _ in range(j):
        v = order * (v + 1)
    return v


def witness_image(G: FiniteGroup, j: int, budget: int = DEFAULT_EXHAUSTIVE_BUDGET) -> Subgroup:
    """Image of :func:`inducibility_witness`: by exhaustive evaluation when
    ``|G|^arity`` fits the budget, otherwise by propagating images through the
    factor structure (the factors use disjoint variables)."""
    p = inducibility_witness(G, j)
    if G.order ** p.arity <= budget:
        vals = np.zeros(G.order, dtype=bool)
        for chunk in _assignment_chunks(G.order, p.arity, 0, G.order ** p.arity):
            vals[p.evaluate_batch(chunk)] = True
        return Subgroup.from_mask(vals)
    img = np.zeros(G.order, dtype=bool)
    img[:] = True  # level 0: a bare variable
    for _ in range(j):
        inner = np.flatnonzero(img)
        comm = np.zeros(G.order, dtype=bool)
        comm[np.unique(G.comm[inner, :])] = True
        acc = np.zeros(G.order, dtype=bool)
        acc[G.identity] = True
        cs = np.flatnonzero(comm)
        for _ in range(G.order):
            nxt = np.zeros(G.order, dtype=bool)
            nxt[np.unique(G.mul[np.ix_(np.flatnonzero(acc), cs)])] = True
            acc = nxt
        img = acc
    return Subgroup.from_mask(img)


# gadget families

def ceil_root(m: int, r: int) -> int:
    """Least ``k >= 1`` with ``k**r >= m``."""
    k = max(1, int(round(m ** (1.0 / r))))
    while k**r < m:
        k += 1
    while k > 1 and (k - 1) ** r >= m:
        k -= 1
    return k


def split_blocks(items: list, levels_left: int) -> list[list]:
    """Split into ``k = ceil(m^(1/levels_left))`` blocks of ``l = ceil(m/k)``,
    padding by repeating the last item."""
    m = len(items)
    k = ceil_root(m, levels_left)
    l = -(-m // k)
    padded = list(items) + [items[-1]] * (k * l - m)
    return [padded[i * l:(i + 1) * l] for i in range(k)]


def and_ref(b: PolyBuilder, ctx: GadgetContext, alpha: int, inputs: list[int]) -> int:
    w = ctx.w
    if alpha == ctx.d - 1:
        return b.q(b.const(ctx.a), inputs, b.const(ctx.g), w)
    blocks = split_blocks(inputs, ctx.d - alpha)
    inner = [and_ref(b, ctx, alpha + 1, blk) for blk in blocks]
    return b.q(b.const(ctx.h[alpha]), inner, b.const(ctx.h[alpha + 1]), w)


def sat_ref(b: PolyBuilder, ctx: GadgetContext, alpha: int, triples: list[tuple[int, int, int]]) -> int:
    w = ctx.w
    if alpha == ctx.d - 1:
        x = b.const(ctx.a)
        for t in triples:
            x = b.D(x, t, w)
        return b.iterated_commutator(x, b.const(ctx.g), w)
    blocks = split_blocks(triples, ctx.d - alpha)
    inner = [sat_ref(b, ctx, alpha + 1, blk) for blk in blocks]
    return b.q(b.const(ctx.h[alpha]), inner, b.const(ctx.h[alpha + 1]), w)


# length recurrences, independent of the DAG

def _iter_comm_len(u: int, v: int, w: int) -> int:
    for _ in range(w):
        u = 2 * u + 2 * v
    return u


def _qstar_len(z: int, xs: Sequence[int], w: int) -> int:
    for x in xs:
        z = _iter_comm_len(z, x, w)
    return z


def and_length(d: int, w: int, alpha: int, m: int, input_len: int = 1) -> int:
    if alpha == d - 1:
        return _qstar_len(1, [input_len] * m + [1], w)
    k = ceil_root(m, d - alpha)
    l = -(-m // k)
    return _qstar_len(1, [and_length(d, w, alpha + 1, l, input_len)] * k + [1], w)


def sat_length(d: int, w: int, alpha: int, m: int, input_len: int = 1) -> int:
    if alpha == d - 1:
        x = 1
        for _ in range(m):
            x = x + _qstar_len(x, [input_len] * 3, w)
        return _iter_comm_len(x, 1, w)
    k = ceil_root(m, d - alpha)
    l = -(-m // k)
    return _qstar_len(1, [sat_length(d, w, alpha + 1, l, input_len)] * k + [1], w)


@dataclass(frozen=True, eq=False)
class GadgetFamily:
    kind: str  # "AND" or "SAT"
    level: int
    m: int
    polynomial: GroupPolynomial
    true_target: int
    modulus: Subgroup
    declared_flat_length: int
    fingerprint: str = ""

    @property
    def log2_flat_length(self) -> float:
        return math.log2(self.declared_flat_length)

    def header(self) -> dict:
        return {
            "kind": self.kind,
            "level": self.level,
            "arity": self.m,
            "variables": self.polynomial.arity,
            "h_alpha": self.true_target,
            "modulus": list(self.modulus),
            "declared_flat_length": str(self.declared_flat_length),
            "log2_flat_length": round(self.log2_flat_length, 6),
            "dag_nodes": self.polynomial.node_count,
            "context_fingerprint": self.fingerprint,
        }


def _check_level(ctx: GadgetContext, alpha: int, m: int) -> None:
    if not 1 <= alpha <= ctx.d - 1:
        raise LevelOutOfRange(f"level {alpha} outside 1..{ctx.d - 1}")
    if m < 1:
        raise LevelOutOfRange("arity must be at least 1")


def build_AND_gadget(ctx: GadgetContext, alpha: int, m: int) -> GadgetFamily:
    _check_level(ctx, alpha, m)
    b = PolyBuilder(ctx.G0)
    root = and_ref(b, ctx, alpha, [b.var(i) for i in range(m)])
    p = b.build(root, m)
    L = and_length(ctx.d, ctx.w, alpha, m)
    if L != p.flat_length():
        raise ContractViolation("AND length recurrence disagrees with DAG length")
    return GadgetFamily("AND", alpha, m, p, ctx.h[alpha], ctx.U[alpha - 1], L, ctx.fingerprint())


def build_SAT_gadget(ctx: GadgetContext, alpha: int, m: int) -> GadgetFamily:
    _check_level(ctx, alpha, m)
    b = PolyBuilder(ctx.G0)
    triples = [(b.var(3 * i), b.var(3 * i + 1), b.var(3 * i + 2)) for i in range(m)]
    root = sat_ref(b, ctx, alpha, triples)
    p = b.build(root, 3 * m)
    L = sat_length(ctx.d, ctx.w, alpha, m)
    if L != p.flat_length():
        raise ContractViolation("SAT length recurrence disagrees with DAG length")
    return GadgetFamily("SAT", alpha, m, p, ctx.h[alpha], ctx.U[alpha - 1], L, ctx.fingerprint())


# verification

@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    checked: int
    mode: str
    counterexample: tuple[int, ...] | None = None
    value: int | None = None
    expected: str | None = None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "mode": self.mode,
            "counterexample": list(self.counterexample) if self.counterexample else None,
            "value": self.value,
            "expected": self.expected,
        }


def _assignment_chunks(n: int, arity: int, start: int, stop: int, size: int = 1 << 16):
    """Assignments with index ``start <= t < stop``; variable 0 is the fastest digit."""
    powers = n ** np.arange(arity, dtype=np.int64)
    for s in range(start, stop, size):
        t = np.arange(s, min(stop, s + size), dtype=np.int64)
        yield (t[:, None] // powers[None, :]) % n


def _expected_true(kind: str, in_h: np.ndarray) -> np.ndarray:
    """Rows whose value should land in the ``h_alpha`` coset."""
    if kind == "AND":
        return ~in_h.any(axis=1)
    if kind == "SAT":
        B = in_h.shape[0]
        return in_h.reshape(B, -1, 3).any(axis=2).all(axis=1)
    raise ValueError(kind)


class _CosetCheck:
    def __init__(self, G: FiniteGroup, target: int, modulus: Subgroup):
        self.G = G
        self.target_inv = int(G.inv[target])
        self.mod = modulus.mask(G.order)

    def __call__(self, values: np.ndarray, want_true: np.ndarray) -> np.ndarray:
        in_true = self.mod[self.G.mul[self.target_inv, values]]
        in_false = self.mod[values]
        return np.where(want_true, in_true, in_false)


def _run_exhaustive(p: GroupPolynomial, classify, total: int, jobs: int = 1):
    """Scan assignments ``0..total-1``; return ``(first_bad_index, value)`` or ``None``."""
    n = p.group.order

    def scan(lo: int, hi: int):
        for A in _assignment_chunks(n, p.arity, lo, hi):
            vals = p.evaluate_batch(A)
            ok = classify(A, vals)
            if not ok.all():
                i = int(np.flatnonzero(~ok)[0])
                t = int(sum(int(A[i, j]) * n**j for j in range(p.arity)))
                return t, int(vals[i])
        return None

    jobs = max(1, min(jobs, total))
    if jobs == 1:
        return scan(0, total)
    bounds = [total * i // jobs for i in range(jobs + 1)]
    with ThreadPoolExecutor(jobs) as ex:
        results = list(ex.map(lambda i: scan(bounds[i], bounds[i + 1]), range(jobs)))
    hits = [r for r in results if r is not None]
    return min(hits) if hits else None


def _decode(t: int, n: int, arity: int) -> tuple[int, ...]:
    return tuple((t // n**j) % n for j in range(arity))


def verify_gadget(
    ctx: GadgetContext,
    family: GadgetFamily,
    mode: str = "exhaustive",
    seed: int = DEFAULT_SEED,
    trials: int = DEFAULT_TRIALS,
    budget: int = DEFAULT_EXHAUSTIVE_BUDGET,
    jobs: int = 1,
) -> VerificationReport:
    """Check the two-coset contract of ``family``.

    ``exhaustive`` visits all ``|G0|^arity`` assignments (refusing beyond
    ``budget``); ``sampled`` draws ``trials`` assignments per H-membership pattern.
    """
    p = family.polynomial
    G0 = ctx.G0
    in_H = ctx.in_H()
    check = _CosetCheck(G0, family.true_target, family.modulus)
    expect = f"h_{family.level} U_{family.level - 1} when the {family.kind} condition holds, else U_{family.level - 1}"

    def classify(A, vals):
        return check(vals, _expected_true(family.kind, in_H[A]))

    if mode == "exhaustive":
        total = G0.order ** p.arity
        if total > budget:
            raise BudgetExceeded(f"{total} assignments exceed budget {budget}")
        bad = _run_exhaustive(p, classify, total, jobs)
        if bad is None:
            return VerificationReport(True, total, mode, expected=expect)
        return VerificationReport(False, total, mode, _decode(bad[0], G0.order, p.arity), bad[1], expect)
    if mode == "sampled":
        return _verify_sampled(ctx, p, classify, seed, trials, expect)
    raise ValueError(f"unknown mode {mode!r}")


def membership_patterns(arity: int, rng: np.random.Generator, limit: int = MAX_ENUMERATED_PATTERNS) -> np.ndarray:
    """All ``2^arity`` in-H patterns when few enough, else ``limit`` random ones
    plus the all-outside and all-inside patterns."""
    if 2**arity <= limit:
        codes = np.arange(2**arity, dtype=np.int64)
        return ((codes[:, None] >> np.arange(arity)) & 1).astype(bool)
    pats = rng.integers(0, 2, size=(limit, arity)).astype(bool)
    return np.vstack([np.zeros((1, arity), bool), np.ones((1, arity), bool), pats])


def _verify_sampled(ctx: GadgetContext, p: GroupPolynomial, classify, seed: int, trials: int, expect: str):
    rng = np.random.default_rng(seed)
    inside = np.array(ctx.H.elements)
    outside = np.array([x for x in range(ctx.G0.order) if x not in ctx.H])
    checked = 0
    for pat in membership_patterns(p.arity, rng):
        ins = inside[rng.integers(len(inside), size=(trials, p.arity))]
        outs = outside[rng.integers(len(outside), size=(trials, p.arity))]
        A = np.where(pat[None, :], ins, outs)
        vals = p.evaluate_batch(A)
        ok = classify(A, vals)
        checked += trials
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            return VerificationReport(False, checked, "sampled", tuple(int(v) for v in A[i]), int(vals[i]), expect)
    return VerificationReport(True, checked, "sampled", expected=expect)


def level_pair(ctx: GadgetContext, alpha: int) -> tuple[int, int]:
    """``(h_alpha, h_{alpha+1})`` for the level polynomial at ``alpha``.

    Below ``d - 1`` this is the context chain. At ``alpha = d - 1`` the context
    holds ``[a, omega g]`` instead, so a fresh descent step from ``h_d`` is used.
    """
    if not 1 <= alpha <= ctx.d - 1:
        raise LevelOutOfRange(f"level {alpha} outside 1..{ctx.d - 1}")
    if alpha < ctx.d - 1:
        return ctx.h[alpha], ctx.h[alpha + 1]
    step = descent_step(ctx.G0, ctx.U, ctx.w, alpha, ctx.h[ctx.d])
    return step.h, ctx.h[ctx.d]


def verify_level_polynomial(
    ctx: GadgetContext,
    alpha: int,
    k: int,
    pair: tuple[int, int] | None = None,
    baked_h: int | None = None,
    budget: int = DEFAULT_EXHAUSTIVE_BUDGET,
    jobs: int = 1,
) -> VerificationReport:
    """Exhaustive check of ``q^k(h_alpha, x_1..x_k, h_{alpha+1})``: in ``h_alpha U_{alpha-1}``
    when every ``x_i`` lies in ``h_{alpha+1} U_alpha``, in ``U_{alpha-1}`` when some
    ``x_i`` lies in ``U_alpha``. ``baked_h`` replaces the constant put into the
    polynomial while keeping the expected coset (mutation testing)."""
    h_a, h_n = pair if pair is not None else level_pair(ctx, alpha)
    G0 = ctx.G0
    b = PolyBuilder(G0)
    root = b.q(b.const(h_a if baked_h is None else baked_h), [b.var(i) for i in range(k)], b.const(h_n), ctx.w)
    p = b.build(root, k)
    total = G0.order**k
    if total > budget:
        raise BudgetExceeded(f"{total} assignments exceed budget {budget}")
    Ua = ctx.U[alpha].mask(G0.order)
    in_coset = Ua[G0.mul[int(G0.inv[h_n]), np.arange(G0.order)]]
    check = _CosetCheck(G0, h_a, ctx.U[alpha - 1])

    def classify(A, vals):
        all_top = in_coset[A].all(axis=1)
        some_low = Ua[A].any(axis=1)
        ok = np.ones(len(vals), dtype=bool)
        ok[all_top] = check(vals[all_top], np.ones(all_top.sum(), bool))
        ok[some_low] = check(vals[some_low], np.zeros(some_low.sum(), bool))
        return ok

    bad = _run_exhaustive(p, classify, total, jobs)
    expect = f"q^{k} at level {alpha}"
    if bad is None:
        return VerificationReport(True, total, "exhaustive", expected=expect)
    return VerificationReport(False, total, "exhaustive", _decode(bad[0], G0.order, k), bad[1], expect)


def verify_qstar1_on_K(ctx: GadgetContext) -> VerificationReport:
    """``q~1(x, y)`` lies in ``x K0`` for ``x`` in K, ``y`` outside H, and in ``K0`` for ``y`` in H."""
    G0 = ctx.G0
    k = np.array(ctx.K.elements)
    y = np.arange(G0.order)
    vals = np.broadcast_to(k[:, None], (len(k), G0.order))
    for _ in range(ctx.w):
        vals = G0.comm[vals, y[None, :]]
    k0 = ctx.K0.mask(G0.order)
    in_H = ctx.in_H()
    quot = k0[G0.mul[G0.inv[k][:, None], vals]]
    ok = np.where(in_H[None, :], k0[vals], quot)
    checked = ok.size
    if ok.all():
        return VerificationReport(True, checked, "exhaustive", expected="q~1 coset behaviour on K")
    i, j = map(int, np.argwhere(~ok)[0])
    return VerificationReport(False, checked, "exhaustive", (int(k[i]), j), int(vals[i, j]), "q~1 coset behaviour on K")


def verify_D_on_K(ctx: GadgetContext, budget: int = DEFAULT_EXHAUSTIVE_BUDGET) -> VerificationReport:
    """``D(x, y1, y2, y3)`` lies in ``K0`` when no ``y_j`` is in H and in ``x K0`` otherwise, for ``x`` in K."""
    G0 = ctx.G0
    b = PolyBuilder(G0)
    p = b.build(b.D(b.var(0), [b.var(1), b.var(2), b.var(3)], ctx.w), 4)
    k = np.array(ctx.K.elements)
    n = G0.order
    total = len(k) * n**3
    if total > budget:
        raise BudgetExceeded(f"{total} assignments exceed budget {budget}")
    k0 = ctx.K0.mask(n)
    in_H = ctx.in_H()
    Y = next(_assignment_chunks(n, 3, 0, n**3, size=n**3))
    some = in_H[Y].any(axis=1)
    for x in k:
        vals = p.evaluate_columns([int(x), Y[:, 0], Y[:, 1], Y[:, 2]])
        ok = np.where(some, k0[G0.mul[int(G0.inv[x]), vals]], k0[vals])
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            return VerificationReport(False, total, "exhaustive", (int(x),) + tuple(int(v) for v in Y[i]), int(vals[i]), "D coset behaviour")
    return VerificationReport(True, total, "exhaustive", expected="D coset behaviour")


def mutate_family(family: GadgetFamily, old: int, new: int) -> GadgetFamily:
    """Copy of ``family`` with every constant ``old`` replaced by ``new``; the
    expected target is left alone so verification should fail."""
    nodes = tuple(("CONST", new) if n[0] == "CONST" and n[1] == old else n for n in family.polynomial.nodes)
    p = GroupPolynomial(family.polynomial.group, nodes, family.polynomial.root, family.polynomial.arity)
    return GadgetFamily(family.kind, family.level, family.m, p, family.true_target, family.modulus,
                        family.declared_flat_length, family.fingerprint)
