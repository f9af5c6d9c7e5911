import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmanifold.superlin import (
    ANTISYMMETRIC,
    SYMMETRIC,
    PairingForm,
    SuperSpace,
    casimir_of,
    contract_left,
    contract_right,
    koszul_sign,
    parity_shift,
    permutation_sign,
    shuffle_sign,
)


def bubble_sign(parities, perm, antisymmetric):
    # independent oracle: realise the reordering by adjacent swaps
    word = list(range(len(perm)))
    target = list(perm)
    sign = 1
    for i in range(len(target)):
        j = word.index(target[i])
        while j > i:
            a, b = word[j - 1], word[j]
            if parities[a] and parities[b]:
                sign = -sign
            if antisymmetric:
                sign = -sign
            word[j - 1], word[j] = b, a
            j -= 1
    return sign


def test_koszul_examples():
    assert koszul_sign([1, 0, 1], [0, 1, 2]) == 1
    assert koszul_sign([1, 1], [1, 0], antisymmetric=True) == 1
    assert koszul_sign([0, 0], [1, 0], antisymmetric=True) == -1
    assert koszul_sign([1, 1], [1, 0]) == -1


def test_koszul_rejects_non_permutations():
    with pytest.raises(ValueError):
        koszul_sign([0, 0], [0, 0])
    with pytest.raises(ValueError):
        koszul_sign([0], [0, 1])


def test_shuffle_examples():
    assert shuffle_sign([1, 0, 1], [0, 1], [2]) == 1
    assert shuffle_sign([0, 0], [1], [0], antisymmetric=True) == -1
    assert shuffle_sign([1, 1], [1], [0], antisymmetric=True) == 1


perms = st.integers(0, 6).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 1), min_size=n, max_size=n), st.permutations(list(range(n))))
)


@settings(max_examples=200, deadline=None)
@given(perms, st.booleans())
def test_koszul_matches_adjacent_swaps(data, anti):
    parities, perm = data
    assert koszul_sign(parities, perm, anti) == bubble_sign(parities, perm, anti)


@settings(max_examples=100, deadline=None)
@given(perms, st.data())
def test_koszul_composition(data, draw):
    parities, p = data
    q = draw.draw(st.permutations(list(range(len(p)))))
    # reorder by p, then reorder the result by q
    composed = [p[i] for i in q]
    inner = [parities[i] for i in p]
    assert koszul_sign(parities, composed) == koszul_sign(parities, p) * koszul_sign(inner, q)


def test_permutation_sign():
    for perm in itertools.permutations(range(4)):
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        assert permutation_sign(perm) == (-1) ** inversions


def test_parity_shift():
    V = SuperSpace(("x",), (0,))
    assert parity_shift(V).parities == (1,)
    assert parity_shift(parity_shift(V)) == V
    W = SuperSpace(("a", "b", "c", "d"), (0, 1, 1, 0))
    assert parity_shift(W).sdim == (2, 2)
    assert parity_shift(W).parities == (1, 0, 0, 1)


def test_space_validation():
    with pytest.raises(ValueError):
        SuperSpace(("x", "x"), (0, 1))
    with pytest.raises(ValueError):
        SuperSpace(("x",), (0, 1))


def test_pairing_validation():
    V = SuperSpace(("x", "xi"), (0, 1))
    with pytest.raises(ValueError):
        PairingForm(V, [[0, 1], [1, 0]], SYMMETRIC)  # odd entry pairs even with odd
    with pytest.raises(ValueError):
        PairingForm(SuperSpace(("a", "b"), (0, 0)), [[0, 1], [2, 0]], SYMMETRIC)
    with pytest.raises(ValueError):
        PairingForm(SuperSpace(("a", "b"), (0, 0)), [[1, 0], [0, 0]], SYMMETRIC)  # degenerate


def test_casimir_examples(gl11):
    odd = SuperSpace(("xi1", "xi2"), (1, 1))
    hyper = PairingForm(odd, [[0, 1], [1, 0]], ANTISYMMETRIC)  # super-antisymmetric on odd vectors
    assert casimir_of(hyper).tensor == ((0, 1), (1, 0))
    even = SuperSpace(("a", "b", "c"), (0, 0, 0))
    ident = PairingForm(even, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], SYMMETRIC)
    assert casimir_of(ident).tensor == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    cas = casimir_of(gl11.pairing)
    eye = [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]
    assert contract_left(cas) == eye
    assert contract_right(cas) == eye


def test_gl11_supertrace_form(gl11):
    # (e_ij, e_ji) = (-1)^{parity of i}, with index 1 odd
    labels = gl11.space.labels
    g = gl11.pairing
    assert g(labels.index("e00"), labels.index("e00")) == 1
    assert g(labels.index("e11"), labels.index("e11")) == -1
    assert g(labels.index("e01"), labels.index("e10")) == 1
    assert g(labels.index("e10"), labels.index("e01")) == -1
    assert g.kind == SYMMETRIC


def test_antisymmetric_form():
    V = SuperSpace(("x", "y"), (0, 0))
    w = PairingForm(V, [[0, 1], [-1, 0]], ANTISYMMETRIC)
    assert w(0, 1) == -w(1, 0)
