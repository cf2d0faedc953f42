"""Checks of the basic commutator calculus on concrete groups.

Each check returns an :class:`IdentityReport`. Exhaustive checks sweep every
normal subgroup (or pair) of the group; sampled checks draw from a seeded
generator and are meant for groups where the sweep gets large.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import structure as st
from .groups import FiniteGroup
from .structure import Subgroup

DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class IdentityReport:
    name: str
    checked: int
    failures: int
    example: tuple | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {"name": self.name, "checked": self.checked, "failures": self.failures,
                "passed": self.passed, "example": list(self.example) if self.example else None}


def _report(name: str, ok: np.ndarray, witnesses) -> IdentityReport:
    ok = np.asarray(ok, dtype=bool).ravel()
    bad = int((~ok).sum())
    ex = None
    if bad:
        i = int(np.flatnonzero(~ok)[0])
        ex = tuple(int(np.asarray(w).ravel()[i]) for w in witnesses)
    return IdentityReport(name, int(ok.size), bad, ex)


def _merge(name: str, reports: list[IdentityReport]) -> IdentityReport:
    ex = next((r.example for r in reports if r.failures), None)
    return IdentityReport(name, sum(r.checked for r in reports), sum(r.failures for r in reports), ex)


def _conj(G: FiniteGroup, x, y):
    """``x^y = y^-1 x y``."""
    return G.mul[G.mul[G.inv[y], x], y]


def _iter_comm(G: FiniteGroup, x, g, k: int):
    for _ in range(k):
        x = G.comm[x, g]
    return x


def _normal_pairs(G: FiniteGroup, normals: list[Subgroup] | None):
    normals = normals if normals is not None else st.all_normal_subgroups(G)
    return normals, list(product(normals, normals))


def product_rules(G: FiniteGroup) -> IdentityReport:
    """``[xy,z] = [x,z]^y [y,z]`` and ``[x,yz] = [x,z][x,y]^z`` for all triples."""
    n = G.order
    x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    c = G.comm
    left = c[G.mul[x, y], z] == G.mul[_conj(G, c[x, z], y), c[y, z]]
    right = c[x, G.mul[y, z]] == G.mul[c[x, z], _conj(G, c[x, y], z)]
    return _report("commutator product rules", left & right, (x, y, z))


def lattice_rules(G: FiniteGroup, normals: list[Subgroup] | None = None) -> IdentityReport:
    """``[A,B] = [B,A] <= A ∩ B`` and ``[K1 K2, N] = [K1,N][K2,N]`` over the normal lattice."""
    normals, pairs = _normal_pairs(G, normals)
    comm = {(i, j): st.commutator_set_closure(G, A, B)
            for (i, A), (j, B) in product(enumerate(normals), enumerate(normals))}
    ok, wit = [], []
    for i, j in comm:
        A, B = normals[i], normals[j]
        meet = Subgroup.of(set(A) & set(B))
        ok.append(comm[i, j] == comm[j, i] and comm[i, j] <= meet)
        wit.append((i, j, -1))
    for i, j, l in product(range(len(normals)), repeat=3):
        K12 = st.join(G, normals[i], normals[j])
        lhs = st.commutator_set_closure(G, K12, normals[l])
        rhs = st.join(G, comm[i, l], comm[j, l])
        ok.append(lhs == rhs)
        wit.append((i, j, l))
    wit_arr = np.array(wit)
    return _report("normal lattice commutator rules", np.array(ok), (wit_arr[:, 0], wit_arr[:, 1], wit_arr[:, 2]))


def coset_stability(G: FiniteGroup, omega: int | None = None, normals: list[Subgroup] | None = None) -> IdentityReport:
    """For normal N, M: ``x ≡ y mod N`` and ``g ∈ M`` give
    ``[x, k g] ≡ [y, k g] mod [N, k M]`` for ``1 <= k <= 2 omega``."""
    normals, pairs = _normal_pairs(G, normals)
    omega = omega or st.compute_omega(G, normals).omega
    out = []
    xs = np.arange(G.order)
    for N, M in pairs:
        nn = np.array(N.elements)
        X = np.repeat(xs, len(nn))
        Y = G.mul[X, np.tile(nn, G.order)]
        chain = N
        for k in range(1, 2 * omega + 1):
            chain = st.commutator_set_closure(G, chain, M)
            mask = chain.mask(G.order)
            for g in M:
                u = _iter_comm(G, X, g, k)
                v = _iter_comm(G, Y, g, k)
                out.append(_report("", mask[G.mul[G.inv[u], v]], (X, Y, np.full_like(X, g))))
    return _merge("commutators respect cosets", out)


def _left_normed_pairs(G: FiniteGroup, M: Subgroup, N: Subgroup, depth: int):
    """Reachable pairs ``([g,x1..xi], [g,y1..yi])`` with ``g ∈ M`` and ``x_j ≡ y_j mod N``."""
    n = G.order
    nn = np.array(N.elements)
    X = np.repeat(np.arange(n), len(nn))
    Y = G.mul[X, np.tile(nn, n)]
    cur = np.zeros((n, n), dtype=bool)
    cur[list(M), list(M)] = True
    levels = []
    for _ in range(depth):
        u, v = np.nonzero(cur)
        nxt = np.zeros((n, n), dtype=bool)
        nxt[G.comm[u[:, None], X[None, :]], G.comm[v[:, None], Y[None, :]]] = True
        levels.append(nxt)
        cur = nxt
    return levels


def left_normed_congruence(G: FiniteGroup, depth: int = 3, normals: list[Subgroup] | None = None) -> IdentityReport:
    """``[g, x_1..x_n] ≡ [g, y_1..y_n] mod [M, N]`` for ``g ∈ M``, ``x_i ≡ y_i mod N``,
    ``n <= depth``; exhaustive through the reachable-pair closure."""
    normals, pairs = _normal_pairs(G, normals)
    out = []
    for N, M in pairs:
        mask = st.commutator_set_closure(G, M, N).mask(G.order)
        for i, level in enumerate(_left_normed_pairs(G, M, N, depth), start=1):
            u, v = np.nonzero(level)
            out.append(_report("", mask[G.mul[G.inv[u], v]], (u, v, np.full_like(u, i))))
    return _merge("left-normed commutators modulo [M,N]", out)


def centralizing_factor(G: FiniteGroup, omega: int | None = None, normals: list[Subgroup] | None = None) -> IdentityReport:
    """For normal N, ``f ∈ C_G(N)``, ``h ∈ N``: ``[hf, k g] = [h, k g][f, k g]``, ``1 <= k <= 2 omega``."""
    normals = normals if normals is not None else st.all_normal_subgroups(G)
    omega = omega or st.compute_omega(G, normals).omega
    out = []
    gs = np.arange(G.order)
    for N in normals:
        C = st.centralizer(G, N)
        h, f, g = np.meshgrid(np.array(N.elements), np.array(C.elements), gs, indexing="ij")
        a, b, c = G.mul[h, f], h, f
        for _ in range(2 * omega):
            a, b, c = G.comm[a, g], G.comm[b, g], G.comm[c, g]
            out.append(_report("", a == G.mul[b, c], (h, f, g)))
    return _merge("centralizing factor splits", out)


def exhaustive_suite(G: FiniteGroup) -> list[IdentityReport]:
    normals = st.all_normal_subgroups(G)
    omega = st.compute_omega(G, normals).omega
    return [
        product_rules(G),
        lattice_rules(G, normals),
        coset_stability(G, omega, normals),
        left_normed_congruence(G, 3, normals),
        centralizing_factor(G, omega, normals),
    ]


def sampled_suite(G: FiniteGroup, samples: int = DEFAULT_SAMPLES, seed: int = 0xF177) -> list[IdentityReport]:
    """Each identity on ``samples`` random tuples; the lattice rule stays exhaustive."""
    rng = np.random.default_rng(seed)
    normals = st.all_normal_subgroups(G)
    omega = st.compute_omega(G, normals).omega
    n = G.order
    c = G.comm

    def pick(subs: list[Subgroup], idx: np.ndarray) -> np.ndarray:
        """One random element of ``subs[idx[t]]`` per row."""
        sizes = np.array([len(S) for S in subs])
        table = np.zeros((len(subs), sizes.max()), dtype=np.int64)
        for i, S in enumerate(subs):
            table[i, :len(S)] = S.elements
        return table[idx, (rng.random(len(idx)) * sizes[idx]).astype(np.int64)]

    x, y, z = (rng.integers(n, size=samples) for _ in range(3))
    left = c[G.mul[x, y], z] == G.mul[_conj(G, c[x, z], y), c[y, z]]
    right = c[x, G.mul[y, z]] == G.mul[c[x, z], _conj(G, c[x, y], z)]
    reports = [_report("commutator product rules (sampled)", left & right, (x, y, z)),
               lattice_rules(G, normals)]

    # coset stability
    Ni, Mi = rng.integers(len(normals), size=samples), rng.integers(len(normals), size=samples)
    k = rng.integers(1, 2 * omega + 1, size=samples)
    X = rng.integers(n, size=samples)
    Y = G.mul[X, pick(normals, Ni)]
    g = pick(normals, Mi)
    chains = {}
    ok = np.zeros(samples, dtype=bool)
    u, v = X.copy(), Y.copy()
    for step in range(1, 2 * omega + 1):
        u, v = c[u, g], c[v, g]
        sel = k == step
        for t in np.flatnonzero(sel):
            key = (int(Ni[t]), int(Mi[t]), step)
            if key not in chains:
                ch = normals[key[0]]
                for _ in range(step):
                    ch = st.commutator_set_closure(G, ch, normals[key[1]])
                chains[key] = ch.mask(n)
            ok[t] = chains[key][G.mul[G.inv[u[t]], v[t]]]
    reports.append(_report("commutators respect cosets (sampled)", ok, (X, Y, g)))

    # left-normed congruence
    depth = rng.integers(1, 4, size=samples)
    g = pick(normals, Mi)
    u, v = g.copy(), g.copy()
    for step in range(1, 4):
        xs = rng.integers(n, size=samples)
        ys = G.mul[xs, pick(normals, Ni)]
        live = depth >= step
        u = np.where(live, c[u, xs], u)
        v = np.where(live, c[v, ys], v)
    mods = {(i, j): st.commutator_set_closure(G, normals[j], normals[i]).mask(n)
            for i in range(len(normals)) for j in range(len(normals))}
    diff = G.mul[G.inv[u], v]
    ok = np.array([mods[int(a), int(b)][d] for a, b, d in zip(Ni, Mi, diff)])
    reports.append(_report("left-normed commutators modulo [M,N] (sampled)", ok, (g, u, v)))

    # centralizing factor
    cents = [st.centralizer(G, N) for N in normals]
    h, f = pick(normals, Ni), pick(cents, Ni)
    g = rng.integers(n, size=samples)
    k = rng.integers(1, 2 * omega + 1, size=samples)
    a, b, cc = G.mul[h, f], h, f
    ok = np.ones(samples, dtype=bool)
    for step in range(1, 2 * omega + 1):
        a, b, cc = c[a, g], c[b, g], c[cc, g]
        sel = k == step
        ok[sel] = a[sel] == G.mul[b[sel], cc[sel]]
    reports.append(_report("centralizing factor splits (sampled)", ok, (h, f, g)))
    return reports
