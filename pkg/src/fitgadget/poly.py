"""Group polynomials as straight-line programs.

A polynomial is an append-only list of nodes ``CONST e``, ``VAR i``,
``MUL a b`` and ``INV a`` whose references point strictly backward. The
builder hash-conses nodes, so identical subterms are stored once. Flattened
word length is computed exactly with Python integers; an inverted variable
counts as a single letter.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArityMismatch, CapExceeded, GroupMismatch, SLPFormatError
from .groups import FiniteGroup

CONST, VAR, MUL, INV = "CONST", "VAR", "MUL", "INV"

DEFAULT_FLATTEN_CAP = 10**6


@dataclass(frozen=True, eq=False)
class GroupPolynomial:
    group: FiniteGroup
    nodes: tuple[tuple, ...]
    root: int
    arity: int

    def __post_init__(self):
        for i, node in enumerate(self.nodes):
            op = node[0]
            if op in (MUL, INV):
                if any(not 0 <= r < i for r in node[1:]):
                    raise SLPFormatError(f"node t{i} references a later or missing node")
            elif op == VAR:
                if not 0 <= node[1] < self.arity:
                    raise ArityMismatch(f"variable x{node[1]} outside arity {self.arity}")
            elif op == CONST:
                self.group.check(node[1])
            else:
                raise SLPFormatError(f"unknown node kind {op!r}")
        if not 0 <= self.root < len(self.nodes):
            raise SLPFormatError("root out of range")

    def __repr__(self) -> str:
        return f"GroupPolynomial(nodes={len(self.nodes)}, arity={self.arity})"

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @cached_property
    def _release_after(self) -> list[list[int]]:
        last = {}
        for i, node in enumerate(self.nodes):
            if node[0] in (MUL, INV):
                for r in node[1:]:
                    last[r] = i
        out: list[list[int]] = [[] for _ in self.nodes]
        for r, i in last.items():
            if r != self.root:
                out[i].append(r)
        return out

    def variables(self) -> list[int]:
        return sorted({n[1] for n in self.nodes if n[0] == VAR})

    def evaluate(self, assignment: Sequence[int]) -> int:
        """Value of the polynomial at one assignment."""
        if len(assignment) != self.arity:
            raise ArityMismatch(f"expected {self.arity} values, got {len(assignment)}")
        cols = [self.group.check(a) for a in assignment]
        return int(self.evaluate_columns(cols))

    def evaluate_batch(self, assignments: np.ndarray) -> np.ndarray:
        """Values at each row of a ``(B, arity)`` array of assignments."""
        A = np.asarray(assignments)
        if A.ndim != 2 or A.shape[1] != self.arity:
            raise ArityMismatch(f"expected shape (B, {self.arity}), got {A.shape}")
        out = self.evaluate_columns([A[:, i] for i in range(self.arity)])
        return np.broadcast_to(out, (A.shape[0],)).copy()

    def evaluate_columns(self, cols: Sequence) -> np.ndarray | int:
        """Evaluate with one entry per variable, each a scalar or a 1-d array.

        Scalar entries are broadcast, so subterms depending only on scalar
        variables are computed once per call.
        """
        mul, inv = self.group.mul, self.group.inv
        vals: list = [None] * len(self.nodes)
        release = self._release_after
        for i, node in enumerate(self.nodes):
            op = node[0]
            if op == MUL:
                vals[i] = mul[vals[node[1]], vals[node[2]]]
            elif op == INV:
                vals[i] = inv[vals[node[1]]]
            elif op == VAR:
                vals[i] = cols[node[1]]
            else:
                vals[i] = node[1]
            for r in release[i]:
                vals[r] = None
        return vals[self.root]

    def flat_length(self, var_weights: Sequence[int] | None = None) -> int:
        """Letter count of the flattened word; ``var_weights[i]`` overrides the
        length contributed by each occurrence of variable ``i``."""
        lens: list[int] = []
        for node in self.nodes:
            op = node[0]
            if op == MUL:
                lens.append(lens[node[1]] + lens[node[2]])
            elif op == INV:
                lens.append(lens[node[1]])
            elif op == VAR and var_weights is not None:
                lens.append(int(var_weights[node[1]]))
            else:
                lens.append(1)
        return lens[self.root]

    def flatten(self, cap: int = DEFAULT_FLATTEN_CAP) -> list[tuple]:
        """Materialize the word: letters ``("c", e)`` or ``("v", i, +1/-1)``."""
        n = self.flat_length()
        if n > cap:
            raise CapExceeded(f"flat length {n} exceeds cap {cap}")
        inv = self.group.inv
        word: list[tuple] = []
        stack = [(self.root, False)]
        while stack:
            i, flip = stack.pop()
            node = self.nodes[i]
            op = node[0]
            if op == MUL:
                a, b = node[1], node[2]
                # push in reverse of emission order
                if flip:
                    stack.append((a, True))
                    stack.append((b, True))
                else:
                    stack.append((b, False))
                    stack.append((a, False))
            elif op == INV:
                stack.append((node[1], not flip))
            elif op == VAR:
                word.append(("v", node[1], -1 if flip else 1))
            else:
                word.append(("c", int(inv[node[1]]) if flip else node[1]))
        return word

    def to_slp(self) -> str:
        return format_slp(self)

    def with_group(self, group: FiniteGroup) -> "GroupPolynomial":
        return GroupPolynomial(group, self.nodes, self.root, self.arity)


def evaluate_word(G: FiniteGroup, word: Iterable[tuple], assignment: Sequence[int]) -> int:
    """Left-to-right product of a flat word; ``x^-1`` is read as ``x^(|G|-1)``."""
    acc = G.identity
    for letter in word:
        if letter[0] == "c":
            acc = int(G.mul[acc, letter[1]])
        else:
            x = assignment[letter[1]]
            acc = int(G.mul[acc, x if letter[2] > 0 else G.power(x, G.order - 1)])
    return acc


class PolyBuilder:
    """Hash-consing node store used to assemble polynomials."""

    def __init__(self, group: FiniteGroup):
        self.group = group
        self.nodes: list[tuple] = []
        self._index: dict[tuple, int] = {}

    def _add(self, node: tuple) -> int:
        ref = self._index.get(node)
        if ref is None:
            ref = len(self.nodes)
            self.nodes.append(node)
            self._index[node] = ref
        return ref

    def const(self, e: int) -> int:
        return self._add((CONST, self.group.check(e)))

    def var(self, i: int) -> int:
        return self._add((VAR, int(i)))

    def mul(self, a: int, b: int) -> int:
        return self._add((MUL, a, b))

    def inv(self, a: int) -> int:
        return self._add((INV, a))

    def product(self, refs: Sequence[int]) -> int:
        if not refs:
            return self.const(self.group.identity)
        acc = refs[0]
        for r in refs[1:]:
            acc = self.mul(acc, r)
        return acc

    def commutator(self, u: int, v: int) -> int:
        return self.mul(self.mul(self.mul(self.inv(u), self.inv(v)), u), v)

    def iterated_commutator(self, u: int, v: int, k: int) -> int:
        for _ in range(k):
            u = self.commutator(u, v)
        return u

    def qstar(self, z: int, xs: Sequence[int], omega: int) -> int:
        """``q~(z, x_1..x_k)``: nest an omega-fold commutator per ``x_i``."""
        for x in xs:
            z = self.iterated_commutator(z, x, omega)
        return z

    def q(self, z: int, xs: Sequence[int], w: int, omega: int) -> int:
        return self.qstar(z, list(xs) + [w], omega)

    def D(self, x: int, ys: Sequence[int], omega: int) -> int:
        """``x * q~3(x, y_1, y_2, y_3)^-1``."""
        return self.mul(x, self.inv(self.qstar(x, ys, omega)))

    def import_poly(self, p: GroupPolynomial, var_refs: Mapping[int, int] | Sequence[int] | None = None) -> int:
        """Copy ``p`` into this builder, replacing ``VAR i`` by ``var_refs[i]``."""
        if p.group is not self.group and not np.array_equal(p.group.mul, self.group.mul):
            raise GroupMismatch("polynomial belongs to a different group")
        refs: list[int] = []
        for node in p.nodes:
            op = node[0]
            if op == MUL:
                refs.append(self.mul(refs[node[1]], refs[node[2]]))
            elif op == INV:
                refs.append(self.inv(refs[node[1]]))
            elif op == VAR:
                i = node[1]
                if var_refs is not None and (i in var_refs if isinstance(var_refs, Mapping) else i < len(var_refs)):
                    refs.append(var_refs[i])
                else:
                    refs.append(self.var(i))
            else:
                refs.append(self.const(node[1]))
        return refs[p.root]

    def build(self, root: int, arity: int | None = None) -> GroupPolynomial:
        """Freeze the sub-DAG reachable from ``root``, keeping creation order."""
        keep = set()
        stack = [root]
        while stack:
            i = stack.pop()
            if i in keep:
                continue
            keep.add(i)
            node = self.nodes[i]
            if node[0] in (MUL, INV):
                stack.extend(node[1:])
        order = sorted(keep)
        new = {old: k for k, old in enumerate(order)}
        nodes = []
        for old in order:
            node = self.nodes[old]
            if node[0] in (MUL, INV):
                nodes.append((node[0],) + tuple(new[r] for r in node[1:]))
            else:
                nodes.append(node)
        if arity is None:
            arity = 1 + max((n[1] for n in nodes if n[0] == VAR), default=-1)
        return GroupPolynomial(self.group, tuple(nodes), new[root], arity)


def variable(G: FiniteGroup, i: int = 0, arity: int | None = None) -> GroupPolynomial:
    b = PolyBuilder(G)
    return b.build(b.var(i), arity if arity is not None else i + 1)


def constant(G: FiniteGroup, e: int, arity: int = 0) -> GroupPolynomial:
    b = PolyBuilder(G)
    return b.build(b.const(e), arity)


def substitute(p: GroupPolynomial, mapping: Mapping[int, GroupPolynomial] | Sequence[GroupPolynomial]) -> GroupPolynomial:
    """Compose: replace each mapped variable of ``p`` by its polynomial.

    Unmapped variables stay as they are. Each mapped polynomial is imported
    once, so its DAG is shared by every occurrence.
    """
    items = mapping.items() if isinstance(mapping, Mapping) else enumerate(mapping)
    b = PolyBuilder(p.group)
    refs = {}
    arity = 0
    for i, m in items:
        if m.group is not p.group and not np.array_equal(m.group.mul, p.group.mul):
            raise GroupMismatch("substituted polynomial belongs to a different group")
        refs[i] = b.import_poly(m)
        arity = max(arity, m.arity)
    if set(range(p.arity)) - set(refs):
        arity = max(arity, p.arity)
    return b.build(b.import_poly(p, refs), arity)


def build_qstar(G: FiniteGroup, omega: int, k: int) -> GroupPolynomial:
    """``q~k(z, x_1, ..., x_k)`` with variable ids ``z = 0``, ``x_i = i``."""
    if k < 0 or omega < 1:
        raise ValueError("need k >= 0 and omega >= 1")
    b = PolyBuilder(G)
    root = b.qstar(b.var(0), [b.var(i) for i in range(1, k + 1)], omega)
    return b.build(root, k + 1)


def build_q(G: FiniteGroup, omega: int, k: int) -> GroupPolynomial:
    """``q^k(z, x_1, ..., x_k, w) = q~(k+1)``; ``w`` has id ``k + 1``."""
    return build_qstar(G, omega, k + 1)


def build_D(G: FiniteGroup, omega: int) -> GroupPolynomial:
    """``D(x, y1, y2, y3) = x * q~3(x, y1, y2, y3)^-1``."""
    b = PolyBuilder(G)
    x = b.var(0)
    return b.build(b.D(x, [b.var(1), b.var(2), b.var(3)], omega), 4)


def qstar_length_closed_form(omega: int, k: int) -> int:
    """Flat length of ``q~k`` over single-letter variables: ``L -> 2^omega (L + 2) - 2``."""
    L = 1
    for _ in range(k):
        L = 2**omega * (L + 2) - 2
    return L


# straight-line program text format

_LINE = re.compile(r"^t(\d+) = (CONST g(\d+)|VAR x(\d+)|MUL t(\d+) t(\d+)|INV t(\d+))$")
_ROOT = re.compile(r"^ROOT t(\d+)$")


def format_slp(p: GroupPolynomial) -> str:
    lines = []
    for i, node in enumerate(p.nodes):
        op = node[0]
        if op == CONST:
            lines.append(f"t{i} = CONST g{node[1]}")
        elif op == VAR:
            lines.append(f"t{i} = VAR x{node[1]}")
        elif op == MUL:
            lines.append(f"t{i} = MUL t{node[1]} t{node[2]}")
        else:
            lines.append(f"t{i} = INV t{node[1]}")
    lines.append(f"ROOT t{p.root}")
    return "\n".join(lines) + "\n"


def parse_slp(text: str, G: FiniteGroup, arity: int | None = None) -> GroupPolynomial:
    """Parse the SLP text format. Indices must strictly increase; references
    must point to earlier lines."""
    pos: dict[int, int] = {}
    nodes: list[tuple] = []
    root = None
    last = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if root is not None:
            raise SLPFormatError(f"line {lineno}: content after ROOT")
        m = _ROOT.match(line)
        if m:
            r = int(m.group(1))
            if r not in pos:
                raise SLPFormatError(f"line {lineno}: unknown root t{r}")
            root = pos[r]
            continue
        m = _LINE.match(line)
        if not m:
            raise SLPFormatError(f"line {lineno}: cannot parse {line!r}")
        t = int(m.group(1))
        if t <= last:
            raise SLPFormatError(f"line {lineno}: index t{t} not increasing")
        last = t

        def ref(s: str) -> int:
            r = int(s)
            if r not in pos:
                raise SLPFormatError(f"line {lineno}: t{r} used before definition")
            return pos[r]

        if m.group(3) is not None:
            node = (CONST, int(m.group(3)))
        elif m.group(4) is not None:
            node = (VAR, int(m.group(4)))
        elif m.group(5) is not None:
            node = (MUL, ref(m.group(5)), ref(m.group(6)))
        else:
            node = (INV, ref(m.group(7)))
        pos[t] = len(nodes)
        nodes.append(node)
    if root is None:
        raise SLPFormatError("missing ROOT line")
    if arity is None:
        arity = 1 + max((n[1] for n in nodes if n[0] == VAR), default=-1)
    return GroupPolynomial(G, tuple(nodes), root, arity)
