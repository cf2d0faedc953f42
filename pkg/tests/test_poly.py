from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as hst

from fitgadget import errors
from fitgadget.groups import builtin
from fitgadget.poly import (
    PolyBuilder, build_D, build_q, build_qstar, constant, evaluate_word, format_slp, parse_slp,
    qstar_length_closed_form, substitute, variable,
)

S3 = builtin("S3")


def all_assignments(G, arity):
    return np.array(list(product(range(G.order), repeat=arity)), dtype=np.int64).reshape(-1, arity)


@hst.composite
def dags(draw, G=S3, max_arity=3, max_ops=12):
    arity = draw(hst.integers(1, max_arity))
    b = PolyBuilder(G)
    refs = [b.var(i) for i in range(arity)]
    for _ in range(draw(hst.integers(1, max_ops))):
        op = draw(hst.sampled_from(["mul", "inv", "const", "comm"]))
        pick = hst.sampled_from(refs)
        if op == "mul":
            refs.append(b.mul(draw(pick), draw(pick)))
        elif op == "inv":
            refs.append(b.inv(draw(pick)))
        elif op == "comm":
            refs.append(b.commutator(draw(pick), draw(pick)))
        else:
            refs.append(b.const(draw(hst.integers(0, G.order - 1))))
    return b.build(refs[-1], arity)


def test_variable_and_constant():
    p = variable(S3, 0, 1)
    assert [p.evaluate([g]) for g in range(6)] == list(range(6))
    assert p.flat_length() == 1
    assert constant(S3, 4).evaluate([]) == 4


def test_arity_checked():
    with pytest.raises(errors.ArityMismatch):
        variable(S3, 0, 2).evaluate([1])


def test_commutator_lengths():
    # [z, x] = z^-1 x^-1 z x has 4 letters; [[z, x], x] has 10
    assert build_qstar(S3, 1, 1).flat_length() == 4
    assert build_qstar(S3, 2, 1).flat_length() == 10
    assert len(build_qstar(S3, 2, 1).flatten()) == 10


def test_qstar_word_by_hand():
    word = build_qstar(S3, 1, 1).flatten()
    assert word == [("v", 0, -1), ("v", 1, -1), ("v", 0, 1), ("v", 1, 1)]


@pytest.mark.parametrize("omega", [1, 2, 3, 4])
@pytest.mark.parametrize("k", range(7))
def test_qstar_closed_form(omega, k):
    p = build_qstar(S3, omega, k)
    assert p.flat_length() == qstar_length_closed_form(omega, k)
    L = 1
    for _ in range(k):
        L = 2**omega * (L + 2) - 2
    assert p.flat_length() == L


def test_qstar_nodes_grow_linearly():
    # at most five nodes per commutator: two inverses and three products
    for w in (1, 2, 4):
        for k in (1, 2, 4):
            assert build_qstar(S3, w, k).node_count <= 1 + k + 5 * w * k


def test_qstar_trivial_inputs():
    p = build_qstar(S3, 2, 1)
    assert all(p.evaluate([z, S3.identity]) == S3.identity for z in range(6))
    assert build_qstar(S3, 2, 0).node_count == 1


def test_D_with_identity_inputs():
    D = build_D(S3, 2)
    for x in range(6):
        assert D.evaluate([x, 0, 0, 0]) == x


@pytest.mark.parametrize("k", [0, 1])
def test_q_duplicate_last_argument(k):
    # q^(k+1)(z, x, w, w) = q^k(z, x, w) pointwise
    w = 2
    big = build_q(S3, w, k + 1)
    small = build_q(S3, w, k)
    mapping = [variable(S3, i, k + 2) for i in range(k + 1)] + [variable(S3, k + 1, k + 2)] * 2
    merged = substitute(big, mapping)
    A = all_assignments(S3, k + 2)
    assert (merged.evaluate_batch(A) == small.evaluate_batch(A)).all()


@given(dags())
def test_flatten_agrees_with_dag(p):
    A = all_assignments(S3, p.arity)
    word = p.flatten()
    assert len(word) == p.flat_length()
    vals = p.evaluate_batch(A)
    for row, v in zip(A[:50], vals[:50]):
        assert evaluate_word(S3, word, row) == v


@given(dags())
def test_slp_round_trip(p):
    text = format_slp(p)
    q = parse_slp(text, S3, p.arity)
    assert format_slp(q) == text
    A = all_assignments(S3, p.arity)
    assert (q.evaluate_batch(A) == p.evaluate_batch(A)).all()


@given(dags(max_arity=2))
def test_identity_substitution(p):
    same = substitute(p, [variable(S3, i, p.arity) for i in range(p.arity)])
    A = all_assignments(S3, p.arity)
    assert (same.evaluate_batch(A) == p.evaluate_batch(A)).all()


@given(dags(max_arity=2), dags(max_arity=2), dags(max_arity=2), hst.data())
def test_substitution_composes(p, m1, m2, data):
    # bring everything to arity 2
    p, m1, m2 = (substitute(x, [variable(S3, i % 2, 2) for i in range(x.arity)]) for x in (p, m1, m2))
    r = [variable(S3, 1, 2), variable(S3, 0, 2)]
    left = substitute(substitute(p, [m1, m2]), r)
    right = substitute(p, [substitute(m1, r), substitute(m2, r)])
    A = all_assignments(S3, 2)
    assert (left.evaluate_batch(A) == right.evaluate_batch(A)).all()
    inner = np.stack([m1.evaluate_batch(A), m2.evaluate_batch(A)], axis=1)
    assert (substitute(p, [m1, m2]).evaluate_batch(A) == p.evaluate_batch(inner)).all()


@given(dags())
def test_evaluate_columns_broadcasts(p):
    A = all_assignments(S3, p.arity)
    cols = [A[:, 0]] + [int(A[7 % len(A), i]) for i in range(1, p.arity)]
    fixed = A[(A[:, 1:] == A[7 % len(A), 1:]).all(axis=1)] if p.arity > 1 else A
    got = np.broadcast_to(p.evaluate_columns([fixed[:, 0]] + cols[1:]), (len(fixed),))
    assert (got == p.evaluate_batch(fixed)).all()


def test_flatten_cap():
    with pytest.raises(errors.CapExceeded):
        build_qstar(S3, 4, 4).flatten(cap=1000)


def test_big_lengths_are_exact():
    L = build_qstar(S3, 6, 12).flat_length()
    assert L == qstar_length_closed_form(6, 12) and L > 2**64


def test_var_weights():
    p = build_qstar(S3, 1, 1)
    assert p.flat_length([3, 1]) == 2 * 3 + 2


@pytest.mark.parametrize("text", [
    "t0 = VAR x0\nt0 = VAR x0\nROOT t0\n",
    "t0 = MUL t0 t0\nROOT t0\n",
    "t0 = CONST g9\nROOT t0\n",
    "t0 = VAR x0\n",
    "t1 = VAR x0\nROOT t1\nt2 = VAR x0\n",
    "t0 = FOO\nROOT t0\n",
])
def test_bad_slp(text):
    with pytest.raises(errors.InputError):
        parse_slp(text, S3)


def test_group_mismatch():
    with pytest.raises(errors.GroupMismatch):
        substitute(variable(S3, 0, 1), [variable(builtin("C3"), 0, 1)])
