import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmanifold.formal import FormalLManifold, TruncatedSuperSeries, potential_to_operations, standard_coordinates, standard_omega
from lmanifold.linfty import (
    LinftyStructure,
    check_all_jacobi,
    cyclic_form,
    cyclic_forms,
    jacobi_residual,
    small_identity,
    validate_structure,
)
from lmanifold.superlin import SYMMETRIC, PairingForm, SuperSpace

V22 = SuperSpace(("a1", "a2", "b1", "b2"), (0, 0, 1, 1))
G22 = PairingForm(V22, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], SYMMETRIC)


def zero_structure(arity=3):
    return LinftyStructure(V22, G22, arity)


def commutator_oracle(i, j):
    """[e_ij-type basis] via explicit 2x2 supermatrices; returns {index: coeff}."""
    basis = [(0, 0), (0, 1), (1, 0), (1, 1)]
    vpar = (0, 1)
    a, b = basis[i], basis[j]
    pa, pb = (vpar[a[0]] + vpar[a[1]]) % 2, (vpar[b[0]] + vpar[b[1]]) % 2
    out = {}
    if a[1] == b[0]:
        k = basis.index((a[0], b[1]))
        out[k] = out.get(k, 0) + 1
    if b[1] == a[0]:
        k = basis.index((b[0], a[1]))
        out[k] = out.get(k, 0) - (-1) ** (pa * pb)
    return {k: c for k, c in out.items() if c}


def test_zero_structure_is_valid_and_passes():
    L = zero_structure()
    assert validate_structure(L) == []
    assert check_all_jacobi(L).passed
    forms = cyclic_forms(L)
    assert [f.arity for f in forms] == [1, 2, 3, 4]
    assert all(not f.tensor for f in forms)


def test_gl11_bracket_matches_supermatrix_commutator(gl11):
    for i, j in itertools.product(range(4), repeat=2):
        assert gl11.apply(2, (i, j)) == commutator_oracle(i, j)


def test_gl11_valid_and_jacobi(gl11):
    assert validate_structure(gl11) == []
    assert jacobi_residual(gl11, 0) == {}
    assert jacobi_residual(gl11, 3) == {}
    report = check_all_jacobi(gl11)
    assert report.passed and report.certified_up_to == 3


def test_super_jacobi_brute_force(gl11):
    # graded Jacobi for the commutator written with explicit signs
    par = gl11.space.parities

    def br(u, v):
        out = {}
        for (i, a), (j, b) in itertools.product(u.items(), v.items()):
            for k, c in commutator_oracle(i, j).items():
                out[k] = out.get(k, 0) + a * b * c
        return {k: c for k, c in out.items() if c}

    for x, y, z in itertools.product(range(4), repeat=3):
        lhs = br({x: 1}, br({y: 1}, {z: 1}))
        r1 = br(br({x: 1}, {y: 1}), {z: 1})
        r2 = br({y: 1}, br({x: 1}, {z: 1}))
        s = (-1) ** (par[x] * par[y])
        total = {k: lhs.get(k, 0) - r1.get(k, 0) - s * r2.get(k, 0) for k in range(4)}
        assert not any(total.values())


def test_symmetric_even_entry_is_reported():
    space = SuperSpace(("a", "b"), (0, 0))
    g = PairingForm(space, [[1, 0], [0, 1]], SYMMETRIC)
    L = LinftyStructure(space, g, 2, ({}, {}, {(0, 1, 0): 1, (1, 0, 0): 1}))
    problems = validate_structure(L)
    assert problems and "(0, 1)->0" in problems[0]


def test_parity_rule_is_reported():
    L = LinftyStructure(V22, G22, 1, ({}, {(0, 1): 1}))
    assert any("parity" in p for p in validate_structure(L))


def test_noninvariant_pairing_raises():
    # l_2(a1, b1) = b2 pairs to a form that is not cyclic
    L = LinftyStructure.from_generators(V22, G22, 2, {2: {(0, 2, 3): 1}})
    assert validate_structure(L)
    with pytest.raises(ValueError):
        cyclic_forms(L)


def test_differential_square():
    nilpotent = LinftyStructure(V22, G22, 2, ({}, {(0, 2): 1, (3, 1): -1}))
    assert jacobi_residual(nilpotent, 1) == {}
    assert jacobi_residual(nilpotent, 0) == {}
    loop = LinftyStructure(V22, G22, 2, ({}, {(0, 2): 1, (2, 0): 1}))
    assert jacobi_residual(loop, 1) == {(0, 0): 1, (2, 2): 1}


def test_curvature_feeds_relation_zero():
    L = LinftyStructure(V22, G22, 2, ({(2,): 1}, {(2, 0): 1}))
    assert jacobi_residual(L, 0) == {(0,): 1}


def test_residual_arity_bound(gl11):
    with pytest.raises(ValueError):
        jacobi_residual(gl11, 4)


def test_perturbed_fails_at_three(gl11_perturbed):
    report = check_all_jacobi(gl11_perturbed)
    assert not report.passed
    assert report.failing == [3]


def test_single_table_entry_perturbation_is_caught(gl11):
    for key in list(gl11.ops[2]):
        table = dict(gl11.ops[2])
        table[key] += 1
        L = LinftyStructure(gl11.space, gl11.pairing, 4, ({}, {}, table))
        assert validate_structure(L) or not check_all_jacobi(L).passed


def test_from_generators_rejects_forced_zero():
    with pytest.raises(ValueError):
        LinftyStructure.from_generators(V22, G22, 2, {2: {(0, 0, 2): 1}})


def test_jobs_agree(gl11_perturbed):
    assert check_all_jacobi(gl11_perturbed, jobs=2).nonzero == check_all_jacobi(gl11_perturbed).nonzero


@st.composite
def random_potential_structures(draw):
    n_even = draw(st.sampled_from([0, 2]))
    n_odd = draw(st.integers(1 if n_even == 0 else 0, 3))
    coords = standard_coordinates(n_even, n_odd)
    omega = standard_omega(n_even, n_odd, draw(st.sampled_from(["identity", "hyperbolic"])) if n_odd % 2 == 0 else "identity")
    terms = {}
    for _ in range(draw(st.integers(1, 5))):
        mono = tuple(draw(st.integers(0, 1 if p else 2)) for p in coords.parities)
        if sum(mono[i] for i, p in enumerate(coords.parities) if p) % 2 == 1 and 0 < sum(mono) <= 4:
            terms[mono] = Fraction(draw(st.integers(-3, 3)), draw(st.integers(1, 3)))
    M = FormalLManifold(coords, omega, TruncatedSuperSeries.from_terms(coords, 5, terms))
    return potential_to_operations(M, 3)


@settings(max_examples=25, deadline=None)
@given(random_potential_structures())
def test_potential_structures_are_cyclic(L):
    assert validate_structure(L) == []


@settings(max_examples=25, deadline=None)
@given(random_potential_structures())
def test_residual_matches_hand_identities(L):
    assert check_all_jacobi(L).crosscheck_mismatches == []


@settings(max_examples=25, deadline=None)
@given(random_potential_structures())
def test_cyclic_form_rotation(L):
    par = L.space.parities
    for n in range(L.max_arity + 1):
        Y = cyclic_form(L, n)
        for key, y in Y.items():
            rot = key[1:] + key[:1]
            rest = sum(par[i] for i in key[1:])
            # shifted parities: each rotation costs (-1)^{n + x0 * rest}
            assert Y.get(rot, 0) == (-1) ** (n + par[key[0]] * rest) * y


def test_small_identity_limits(gl11):
    with pytest.raises(ValueError):
        small_identity(gl11, 4, (0, 0, 0, 0))
