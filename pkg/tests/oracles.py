"""Slow, set-based reference implementations used to cross-check the library.

Nothing here imports the structure module; everything is plain Python over
the multiplication table.
"""
from itertools import combinations
from math import lcm


def gen_closure(G, xs):
    """Subgroup generated by ``xs`` via repeated products."""
    out = {G.identity} | set(xs)
    frontier = list(out)
    while frontier:
        new = []
        for a in frontier:
            for b in list(out):
                for c in (int(G.mul[a, b]), int(G.mul[b, a])):
                    if c not in out:
                        out.add(c)
                        new.append(c)
        frontier = new
    return frozenset(out)


def comm_subgroup(G, A, B):
    return gen_closure(G, {int(G.comm[a, b]) for a in A for b in B})


def conjugacy_classes(G):
    seen, classes = set(), []
    for x in range(G.order):
        if x in seen:
            continue
        cl = {int(G.mul[G.mul[G.inv[g], x], g]) for g in range(G.order)}
        seen |= cl
        classes.append(frozenset(cl))
    return classes


def normal_subgroups(G, max_classes=12):
    """Unions of conjugacy classes that contain 1 and are closed under products."""
    classes = conjugacy_classes(G)
    if len(classes) > max_classes:
        raise ValueError("too many classes for the oracle")
    ident = [c for c in classes if G.identity in c][0]
    rest = [c for c in classes if c is not ident]
    out = set()
    for r in range(len(rest) + 1):
        for combo in combinations(rest, r):
            S = set(ident).union(*combo)
            if all(int(G.mul[a, b]) in S for a in S for b in S):
                out.add(frozenset(S))
    return sorted(out, key=lambda S: (len(S), sorted(S)))


def center_mod(G, N, within):
    """``{z in within : [z, g] in N for all g}``."""
    return frozenset(z for z in within if all(int(G.comm[z, g]) in N for g in range(G.order)))


def is_nilpotent_sub(G, S, base=frozenset()):
    """``S / base`` nilpotent, via the upper central series of ``S`` relative to ``base``."""
    base = frozenset(base) | {G.identity}
    Z = base
    while True:
        nxt = frozenset(z for z in S if all(int(G.comm[z, g]) in Z for g in S))
        if nxt == Z:
            return Z == frozenset(S)
        Z = nxt


def fitting_oracle(G, normals=None):
    normals = normals or normal_subgroups(G)
    nil = [N for N in normals if is_nilpotent_sub(G, N)]
    return gen_closure(G, set().union(*nil))


def upper_fitting_oracle(G, normals=None):
    normals = normals or normal_subgroups(G)
    terms = [frozenset({G.identity})]
    while terms[-1] != frozenset(range(G.order)):
        U = terms[-1]
        cands = [N for N in normals if U <= N and is_nilpotent_sub(G, N, U)]
        top = max(cands, key=len)
        if top == U:
            return None  # not solvable
        terms.append(top)
    return terms


def iterated(G, x, y, k):
    for _ in range(k):
        x = int(G.comm[x, y])
    return x


def omega_oracle(G, normals=None):
    """Least positive omega past every preperiod and k0, divisible by every period."""
    pre, per = 0, 1
    for x in range(G.order):
        for y in range(G.order):
            seen, seq, v = {}, [], x
            while v not in seen:
                seen[v] = len(seq)
                seq.append(v)
                v = int(G.comm[v, y])
            pre = max(pre, seen[v])
            per = lcm(per, len(seq) - seen[v])
    k0 = 0
    for M in normals or normal_subgroups(G):
        for N in normals or normal_subgroups(G):
            chain = [M]
            while True:
                nxt = comm_subgroup(G, chain[-1], N)
                if nxt == chain[-1]:
                    break
                chain.append(nxt)
            k0 = max(k0, len(chain) - 1)
    w = per
    while w < max(pre, k0, 1):
        w += per
    return w
