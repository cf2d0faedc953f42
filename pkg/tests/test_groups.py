import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fitgadget import errors
from fitgadget.groups import (
    CATALOG, PermSpec, builtin, commutator, compose, cycles_to_perm, export_group, from_permutations,
    from_table, invert, iterated_commutator, load_group, multiply, quotient_group, read_group_file,
)
from fitgadget.structure import compute_omega, whole


def idx(G, label):
    return G.labels.index(label)


def perm_of(G, x):
    """Oracle: the permutation behind element ``x`` of a permutation group."""
    degree = max(int(t) for lab in G.labels for t in lab.replace("(", " ").replace(")", " ").split())
    return cycles_to_perm(degree, [list(map(int, c.split())) for c in G.label(x).strip("()").split(")(") if c])


def test_c2_table():
    G = builtin("C2")
    assert G.mul.tolist() == [[0, 1], [1, 0]]


def test_s4_from_generators():
    G = from_permutations(PermSpec(4, (((1, 2),), ((1, 2, 3, 4),))))
    assert G.order == 24
    assert G.identity == 0
    # BFS discovery: generators come right after the identity
    assert G.label(1) == "(1 2)" and G.label(2) == "(1 2 3 4)"


def test_affine72_order():
    assert builtin("remark72").order == 72


def test_composition_is_left_to_right():
    p = cycles_to_perm(3, [(1, 2)])
    q = cycles_to_perm(3, [(1, 3)])
    # apply (1 2) first: 1 -> 2 -> 2, 2 -> 1 -> 3, 3 -> 3 -> 1
    assert compose(p, q) == (1, 2, 0)


def test_s3_products_match_permutations(S3):
    x, y = idx(S3, "(1 2)"), idx(S3, "(1 3)")
    z = multiply(S3, x, y)
    assert perm_of(S3, z) == compose(perm_of(S3, x), perm_of(S3, y))
    assert len(S3.label(z).split()) == 3
    assert S3.label(invert(S3, idx(S3, "(1 2 3)"))) == "(1 3 2)"
    c = commutator(S3, x, idx(S3, "(1 2 3)"))
    assert len(S3.label(c).split()) == 3


def test_permutation_table_against_composition(S4):
    perms = [perm_of(S4, x) for x in range(S4.order)]
    pos = {p: i for i, p in enumerate(perms)}
    for x in range(S4.order):
        for y in range(S4.order):
            assert S4.mul[x, y] == pos[compose(perms[x], perms[y])]


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_group_axioms(name):
    G = builtin(name)
    n = G.order
    e = np.arange(n)
    assert (G.mul[G.identity] == e).all() and (G.mul[:, G.identity] == e).all()
    assert (G.mul[e, G.inv] == G.identity).all()
    if n <= 24:
        a, b, c = np.meshgrid(e, e, e, indexing="ij")
        assert (G.mul[G.mul[a, b], c] == G.mul[a, G.mul[b, c]]).all()


def test_inverse_is_power(S4):
    for x in range(S4.order):
        assert S4.inv[x] == S4.power(x, S4.element_order(x) - 1)
        assert invert(S4, invert(S4, x)) == x


def test_iterated_commutator_basics(S4):
    for x in range(S4.order):
        assert iterated_commutator(S4, x, 5, 0) == x
        assert iterated_commutator(S4, x, S4.identity, 3) == S4.identity
        assert commutator(S4, x, x) == S4.identity


def test_iterated_commutator_periodic_past_omega(S4):
    w = compute_omega(S4).omega
    for x in range(S4.order):
        for y in range(S4.order):
            seq = [iterated_commutator(S4, x, y, k) for k in range(w, 3 * w + 1)]
            assert seq[:w + 1] == seq[w:]


@given(st.sampled_from(["S3", "S4", "D4", "Q8", "C2xS3"]), st.data())
def test_conjugation_composes(name, data):
    G = builtin(name)
    x, y, z = (data.draw(st.integers(0, G.order - 1)) for _ in range(3))

    def conj(a, b):
        return G.mul[G.mul[G.inv[b], a], b]

    assert conj(conj(x, y), z) == conj(x, G.mul[y, z])


def test_quotients(S4):
    Q, proj = quotient_group(S4, whole(S4))
    assert Q.order == 1
    Q, proj = quotient_group(S4, [0])
    assert Q.order == 24
    a4 = [x for x in range(24) if _even(perm_of(S4, x))]
    Q, proj = quotient_group(S4, a4)
    assert Q.order == 2
    for x in range(24):
        for y in range(24):
            assert proj[S4.mul[x, y]] == Q.mul[proj[x], proj[y]]
    # cosets numbered by their smallest element
    assert proj[0] == 0
    with pytest.raises(errors.NotNormal):
        quotient_group(S4, [0, idx(S4, "(1 2)")])


def _even(p):
    seen, parity = set(), 0
    for s in range(len(p)):
        n, x = 0, s
        while x not in seen:
            seen.add(x)
            x = p[x]
            n += 1
        if n:
            parity += n - 1
    return parity % 2 == 0


def test_bad_tables():
    with pytest.raises(errors.NoIdentity):
        from_table([[1, 0], [0, 0]])
    with pytest.raises(errors.InputError):
        from_table([[0, 1], [1, 1]])
    with pytest.raises(errors.NonAssociativeTable):
        # a Latin square with identity 0 that is not associative (a loop of order 5)
        from_table([[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]])
    with pytest.raises(errors.UnknownBuiltin):
        builtin("S7")
    with pytest.raises(errors.InputError):
        cycles_to_perm(3, [(1, 4)])
    with pytest.raises(errors.InputError):
        cycles_to_perm(3, [(1, 2), (2, 3)])
    with pytest.raises(errors.IndexOutOfRange):
        multiply(builtin("C3"), 0, 3)


def test_closure_cap():
    with pytest.raises(errors.ClosureCapExceeded):
        from_permutations(PermSpec(5, (((1, 2),), ((1, 2, 3, 4, 5),))), cap=50)


@pytest.mark.parametrize("name", ["S4", "remark72", "C2xS3", "Q8"])
def test_group_file_round_trip(tmp_path, name):
    G = builtin(name)
    for form in ("auto", "table"):
        path = tmp_path / f"{form}.json"
        path.write_text(json.dumps(export_group(G, form)))
        H = read_group_file(path)
        assert (H.mul == G.mul).all()


def test_perm_spec_reload_is_identical():
    spec = {"permutation_generators": {"degree": 4, "generators": [[[1, 2]], [[1, 2, 3, 4]]]}}
    A, B = load_group(spec), load_group(json.loads(json.dumps(export_group(load_group(spec)))))
    assert (A.mul == B.mul).all() and A.labels == B.labels


def test_group_file_needs_one_source():
    with pytest.raises(errors.InputError):
        load_group({"builtin": "S3", "cayley_table": {"mul": [[0]]}})
