"""Subgroup-level structure: closures, commutator subgroups, lower central
series, the stabilization exponent omega, Fitting subgroup and upper Fitting
series, the normal-subgroup lattice, and centralizers modulo a normal subgroup.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable

import numpy as np

from .errors import (
    BaerSetNotSubgroup,
    ContractViolation,
    LatticeCapExceeded,
    NotNested,
    NotNormal,
    NotSolvable,
)
from .groups import FiniteGroup, quotient_group, subgroup_group

DEFAULT_LATTICE_CAP = 10_000


@dataclass(frozen=True)
class Subgroup:
    """A subset of element indices, stored sorted. Equality is by membership."""

    elements: tuple[int, ...]

    @classmethod
    def of(cls, members: Iterable[int]) -> "Subgroup":
        return cls(tuple(sorted({int(x) for x in members})))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "Subgroup":
        return cls(tuple(int(x) for x in np.flatnonzero(mask)))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        return int(x) in self._set

    def __le__(self, other: "Subgroup") -> bool:
        return self._set <= other._set

    def __lt__(self, other: "Subgroup") -> bool:
        return self._set < other._set

    @property
    def _set(self) -> frozenset[int]:
        s = self.__dict__.get("_cache")
        if s is None:
            s = frozenset(self.elements)
            object.__setattr__(self, "_cache", s)
        return s

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.elements)] = True
        return m

    def sort_key(self) -> tuple:
        return (len(self.elements), self.elements)

    def __repr__(self) -> str:
        if len(self.elements) <= 8:
            return f"Subgroup{self.elements}"
        return f"Subgroup(order={len(self.elements)})"


def trivial(G: FiniteGroup) -> Subgroup:
    return Subgroup((G.identity,))


def whole(G: FiniteGroup) -> Subgroup:
    return Subgroup(tuple(range(G.order)))


def _closure_mask(G: FiniteGroup, seeds: np.ndarray) -> np.ndarray:
    gens = np.unique(seeds)
    mask = np.zeros(G.order, dtype=bool)
    mask[G.identity] = True
    mask[gens] = True
    frontier = np.flatnonzero(mask)
    while frontier.size:
        prods = np.unique(G.mul[np.ix_(frontier, gens)])
        new = prods[~mask[prods]]
        mask[new] = True
        frontier = new
    return mask


def subgroup_closure(G: FiniteGroup, X: Iterable[int]) -> Subgroup:
    """Smallest subgroup containing ``X``."""
    seeds = np.fromiter((int(x) for x in X), dtype=np.int64)
    return Subgroup.from_mask(_closure_mask(G, seeds))


def conjugates(G: FiniteGroup, X: Iterable[int]) -> np.ndarray:
    xs = np.fromiter((int(x) for x in X), dtype=np.int64)
    g = np.arange(G.order)
    return np.unique(G.mul[G.mul[G.inv[g][:, None], xs[None, :]], g[:, None]])


def normal_closure(G: FiniteGroup, X: Iterable[int]) -> Subgroup:
    """Smallest normal subgroup containing ``X``."""
    return Subgroup.from_mask(_closure_mask(G, conjugates(G, X)))


def is_subgroup(G: FiniteGroup, S: Iterable[int]) -> bool:
    el = np.array(sorted(set(int(x) for x in S)), dtype=np.int64)
    if el.size == 0:
        return False
    mask = np.zeros(G.order, dtype=bool)
    mask[el] = True
    return bool(mask[G.identity] and mask[G.mul[np.ix_(el, el)]].all() and mask[G.inv[el]].all())


def is_normal(G: FiniteGroup, S: Iterable[int]) -> bool:
    S = list(S)
    if not is_subgroup(G, S):
        return False
    mask = np.zeros(G.order, dtype=bool)
    mask[S] = True
    return bool(mask[conjugates(G, S)].all())


def _require_normal(G: FiniteGroup, *subs: Subgroup) -> None:
    for S in subs:
        if not is_normal(G, S):
            raise NotNormal(f"{S!r} is not a normal subgroup of {G!r}")


def join(G: FiniteGroup, A: Subgroup, B: Subgroup) -> Subgroup:
    """Subgroup generated by ``A`` and ``B`` (their product when one is normal)."""
    return Subgroup.from_mask(_closure_mask(G, np.array(A.elements + B.elements)))


def commutator_set_closure(G: FiniteGroup, A: Iterable[int], B: Iterable[int]) -> Subgroup:
    a = np.array(list(A), dtype=np.int64)
    b = np.array(list(B), dtype=np.int64)
    return Subgroup.from_mask(_closure_mask(G, G.comm[np.ix_(a, b)].ravel()))


def commutator_subgroup(G: FiniteGroup, A: Subgroup, B: Subgroup, k: int = 1) -> Subgroup:
    """``[A, B]`` for ``k = 1``; the iterate ``[A, B, ..., B]`` (``k`` copies) otherwise."""
    if k < 1:
        raise ValueError("k must be positive")
    _require_normal(G, A, B)
    C = A
    for _ in range(k):
        C = commutator_set_closure(G, C, B)
    if not is_normal(G, C):
        raise NotNormal("commutator of normal subgroups came out non-normal")
    return C


@dataclass(frozen=True)
class LowerCentralSeries:
    terms: tuple[Subgroup, ...]
    residual_index: int

    @property
    def residual(self) -> Subgroup:
        return self.terms[self.residual_index]

    def gamma(self, k: int) -> Subgroup:
        return self.terms[min(k, self.residual_index)]


def lower_central_series(G: FiniteGroup) -> LowerCentralSeries:
    """``gamma_0 = G``, ``gamma_{k+1} = [gamma_k, G]`` until the chain stabilizes."""
    W = whole(G)
    terms = [W]
    while True:
        nxt = commutator_set_closure(G, terms[-1], W)
        if nxt == terms[-1]:
            return LowerCentralSeries(tuple(terms), len(terms) - 1)
        terms.append(nxt)


def nilpotent_residual(G: FiniteGroup) -> Subgroup:
    return lower_central_series(G).residual


def is_nilpotent(G: FiniteGroup) -> bool:
    return len(nilpotent_residual(G)) == 1


def subgroup_is_nilpotent(G: FiniteGroup, S: Subgroup) -> bool:
    """Nilpotency of ``S`` computed through its own lower central series inside ``G``."""
    cur = S
    while True:
        nxt = commutator_set_closure(G, cur, S)
        if len(nxt) == 1:
            return True
        if nxt == cur:
            return False
        cur = nxt


def all_normal_subgroups(G: FiniteGroup, cap: int = DEFAULT_LATTICE_CAP) -> list[Subgroup]:
    """Complete normal-subgroup lattice, as join-closure of the normal closures of
    single elements, sorted by (order, element tuple)."""
    found: dict[tuple, Subgroup] = {}
    t = trivial(G)
    found[t.elements] = t
    for x in range(G.order):
        N = normal_closure(G, [x])
        found.setdefault(N.elements, N)
    frontier = list(found.values())
    while frontier:
        new = []
        current = list(found.values())
        for A in frontier:
            for B in current:
                if A <= B or B <= A:
                    continue
                J = join(G, A, B)
                if J.elements not in found:
                    if len(found) >= cap:
                        raise LatticeCapExceeded(f"more than {cap} normal subgroups")
                    found[J.elements] = J
                    new.append(J)
        frontier = new
    return sorted(found.values(), key=Subgroup.sort_key)


@dataclass(frozen=True)
class OmegaData:
    omega: int
    max_preperiod: int
    period_lcm: int
    k0: int
    # preperiod[x, y], period[x, y] of i -> [x, i y]
    preperiod: np.ndarray = field(repr=False, compare=False)
    period: np.ndarray = field(repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "omega": self.omega,
            "max_preperiod": self.max_preperiod,
            "period_lcm": self.period_lcm,
            "k0": self.k0,
        }


def _tails_and_cycles(f: list[int]) -> tuple[list[int], list[int]]:
    """Tail length and eventual cycle length of every point of the map ``f``."""
    n = len(f)
    mu = [-1] * n
    lam = [0] * n
    for x in range(n):
        if mu[x] >= 0:
            continue
        path: list[int] = []
        pos: dict[int, int] = {}
        y = x
        while mu[y] < 0 and y not in pos:
            pos[y] = len(path)
            path.append(y)
            y = f[y]
        if mu[y] < 0:
            cyc = path[pos[y]:]
            for z in cyc:
                mu[z], lam[z] = 0, len(cyc)
            path = path[: pos[y]]
        for z in reversed(path):
            mu[z] = mu[f[z]] + 1
            lam[z] = lam[f[z]]
    return mu, lam


def chain_stabilization(G: FiniteGroup, M: Subgroup, N: Subgroup) -> int:
    """Least ``s`` with ``[M, s N] = [M, (s+1) N]``."""
    s, cur = 0, M
    while True:
        nxt = commutator_set_closure(G, cur, N)
        if nxt == cur:
            return s
        cur, s = nxt, s + 1


def compute_omega(G: FiniteGroup, normals: list[Subgroup] | None = None) -> OmegaData:
    """Least positive omega that bounds every preperiod of ``i -> [x, i y]``, is a
    multiple of every eventual period, and bounds the stabilization index of every
    chain ``[M, k N]`` over normal subgroups."""
    n = G.order
    pre = np.zeros((n, n), dtype=np.int64)
    per = np.zeros((n, n), dtype=np.int64)
    for y in range(n):
        mu, lam = _tails_and_cycles(G.comm[:, y].tolist())
        pre[:, y] = mu
        per[:, y] = lam
    max_pre = int(pre.max())
    L = reduce(math.lcm, (int(p) for p in np.unique(per)), 1)
    if normals is None:
        normals = all_normal_subgroups(G)
    k0 = max(chain_stabilization(G, M, N) for M in normals for N in normals)
    lower = max(max_pre, k0, 1)
    omega = L * -(-lower // L)
    data = OmegaData(omega, max_pre, L, k0, pre, per)
    _verify_omega(G, data, normals)
    return data


def _verify_omega(G: FiniteGroup, data: OmegaData, normals: list[Subgroup]) -> None:
    w = data.omega
    x = np.arange(G.order)[:, None]
    y = np.arange(G.order)[None, :]
    a = np.broadcast_to(x, (G.order, G.order))
    for _ in range(w):
        a = G.comm[a, y]
    b = a
    for _ in range(w):
        b = G.comm[b, y]
    if not np.array_equal(a, b):
        raise ContractViolation("omega fails element periodicity")
    for M in normals:
        for N in normals:
            c = M
            for _ in range(w):
                c = commutator_set_closure(G, c, N)
            if commutator_set_closure(G, c, N) != c:
                raise ContractViolation("omega fails subgroup-chain stabilization")


def baer_set(G: FiniteGroup, omega: int) -> Subgroup:
    """``{g : [h, omega g] = 1 for all h}``."""
    vals = np.broadcast_to(np.arange(G.order)[:, None], (G.order, G.order))
    g = np.arange(G.order)[None, :]
    for _ in range(omega):
        vals = G.comm[vals, g]
    return Subgroup.from_mask((vals == G.identity).all(axis=0))


def fitting_subgroup(G: FiniteGroup, omega: OmegaData | int | None = None) -> Subgroup:
    """Fitting subgroup via Baer's characterization, post-checked to be a
    nilpotent normal subgroup."""
    if omega is None:
        omega = compute_omega(G)
    w = omega.omega if isinstance(omega, OmegaData) else int(omega)
    F = baer_set(G, w)
    if not is_normal(G, F):
        raise BaerSetNotSubgroup("Baer set is not a normal subgroup")
    if not subgroup_is_nilpotent(G, F):
        raise BaerSetNotSubgroup("Baer set is not nilpotent")
    return F


def fitting_subgroup_by_lattice(G: FiniteGroup) -> Subgroup:
    """Independent route: join of all nilpotent normal subgroups."""
    F = trivial(G)
    for N in all_normal_subgroups(G):
        if subgroup_is_nilpotent(G, N):
            F = join(G, F, N)
    return F


@dataclass(frozen=True)
class FittingSeries:
    terms: tuple[Subgroup, ...]
    # omega of each quotient G/U_i used to compute U_{i+1}
    quotient_omegas: tuple[int, ...] = ()

    @property
    def fitting_length(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, i: int) -> Subgroup:
        return self.terms[i]

    def level(self, x: int) -> int:
        """Least ``i`` with ``x`` in ``U_i``."""
        for i, U in enumerate(self.terms):
            if x in U:
                return i
        raise ValueError(x)


def upper_fitting_series(G: FiniteGroup) -> FittingSeries:
    """``U_{i+1}`` is the preimage of ``Fit(G/U_i)``; each quotient's Fitting
    subgroup uses that quotient's own omega."""
    terms = [trivial(G)]
    omegas = []
    while len(terms[-1]) < G.order:
        Q, proj = quotient_group(G, terms[-1])
        om = compute_omega(Q)
        F = fitting_subgroup(Q, om)
        nxt = Subgroup.from_mask(F.mask(Q.order)[proj])
        if nxt == terms[-1]:
            raise NotSolvable(f"{G!r}: upper Fitting series stalls at order {len(nxt)}")
        terms.append(nxt)
        omegas.append(om.omega)
    return FittingSeries(tuple(terms), tuple(omegas))


def fitting_length(G: FiniteGroup) -> int:
    return upper_fitting_series(G).fitting_length


def subgroup_fitting_series(G: FiniteGroup, S: Subgroup) -> FittingSeries:
    """Upper Fitting series of ``S`` as a group, with terms mapped back into ``G``."""
    H, emb = subgroup_group(G, S)
    ser = upper_fitting_series(H)
    return FittingSeries(tuple(Subgroup.of(emb[list(U)]) for U in ser.terms), ser.quotient_omegas)


def centralizer(G: FiniteGroup, X: Iterable[int]) -> Subgroup:
    xs = np.array(list(X), dtype=np.int64)
    return Subgroup.from_mask((G.comm[:, xs] == G.identity).all(axis=1))


def centralizer_mod(G: FiniteGroup, K: Subgroup, K0: Subgroup) -> Subgroup:
    """``{g : [x, g] in K0 for all x in K}``: the largest normal ``H`` with ``[H, K] <= K0``."""
    if not K0 <= K:
        raise NotNested("K0 must be contained in K")
    _require_normal(G, K, K0)
    in_k0 = K0.mask(G.order)
    H = Subgroup.from_mask(in_k0[G.comm[list(K), :]].all(axis=0))
    if not is_normal(G, H):
        raise NotNormal("centralizer modulo K0 came out non-normal")
    return H
