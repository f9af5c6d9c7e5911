import itertools
import random
from fractions import Fraction

import pytest

from lmanifold.cohft import build_I, check_axioms, orientation_sign, relabel, y_tau
from lmanifold.graphs import tree
from lmanifold.linfty import LinftyStructure, cyclic_form
from lmanifold.superlin import koszul_sign
from lmanifold.treespace import corolla, enumerate_trees, h_space


def test_corolla_gives_cyclic_form(gl11):
    Y3 = cyclic_form(gl11, 2)
    for x in itertools.product(range(4), repeat=3):
        assert y_tau(gl11, corolla(3), x) == Y3.get(x, 0)


def test_two_vertex_tree_is_double_bracket(gl11):
    g = gl11.pairing.matrix
    ginv = gl11.pairing.inverse()
    t = tree(2, [(0, 1)], [(1, 0), (2, 0), (3, 1), (4, 1)])

    def paired(i, j, k, left):
        # g([x_i, x_j], e_k) or g(e_k, [x_i, x_j])
        out = gl11.apply(2, (i, j))
        return sum(c * (g[m][k] if left else g[k][m]) for m, c in out.items())

    for x in itertools.product(range(4), repeat=4):
        direct = sum(
            ginv[a][b] * paired(x[0], x[1], a, True) * paired(x[2], x[3], b, False)
            for a in range(4) for b in range(4) if ginv[a][b]
        )
        assert y_tau(gl11, t, x) == direct


def test_leaf_vertex_without_curvature(gl11):
    t = tree(2, [(0, 1)], [(1, 0), (2, 0)])
    assert all(not y_tau(gl11, t, x) for x in itertools.product(range(4), repeat=2))


def test_y_tau_argument_checks(gl11):
    with pytest.raises(ValueError):
        y_tau(gl11, corolla(3), (0, 1))
    with pytest.raises(ValueError):
        y_tau(gl11, corolla(6), (0,) * 6)  # valence beyond max arity + 1


def test_orientation_is_independent_of_planar_choices(gl11):
    rng = random.Random(7)
    par = gl11.space.parities
    for S in [(1, 2, 3), (1, 2, 3, 4)]:
        for p in (1, 2):
            for t in enumerate_trees(S, p):
                if any(t.valence(v) - 1 > gl11.max_arity for v in range(t.nv)):
                    continue
                for x in itertools.islice(itertools.product(range(4), repeat=len(S)), 0, None, 7):
                    base = y_tau(gl11, t, x) * orientation_sign(t, [t.flags_at(v) for v in range(t.nv)], S[0])
                    for _ in range(2):
                        flags = [rng.sample(t.flags_at(v), t.valence(v)) for v in range(t.nv)]
                        root = rng.choice(S)
                        other = y_tau(gl11, t, x, S, flags) * orientation_sign(t, flags, root)
                        assert other == base
                        # listing the inputs in another order costs their Koszul sign
                        perm = rng.sample(range(len(S)), len(S))
                        order = [S[i] for i in perm]
                        moved = y_tau(gl11, t, [x[i] for i in perm], order, flags) * orientation_sign(t, flags, root)
                        assert moved == koszul_sign([par[i] for i in x], perm) * base


def test_zero_structure_gives_zero_map(gl11):
    L = LinftyStructure(gl11.space, gl11.pairing, 4)
    I = build_I(L, 3, 2)
    assert I.values == {}
    assert check_axioms(I).passed


def test_degree_zero_is_corolla_times_y3(gl11):
    I = build_I(gl11, 3, 0)
    Y3 = cyclic_form(gl11, 2)
    c = corolla(3)
    for x in itertools.product(range(4), repeat=3):
        vec = I(x)
        assert set(vec) <= {c}
        assert abs(vec.get(c, 0)) == abs(Y3.get(x, 0))


def test_values_lie_in_annihilator(gl11):
    I = build_I(gl11, 4, 2)
    for d in range(3):
        hs = h_space((1, 2, 3, 4), d)
        for vec in I.values.values():
            part = {t: c for t, c in vec.items() if t.ne == d}
            assert hs.orthogonal(part)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gl11_axioms(gl11, n):
    rep = check_axioms(build_I(gl11, n, 2))
    assert rep.equivariant and rep.boundary_compatible


def test_perturbed_structure_fails(gl11_perturbed):
    rep = check_axioms(build_I(gl11_perturbed, 4, 2))
    assert not rep.boundary_compatible
    assert not rep.passed


def test_relabel_is_an_action():
    t = tree(2, [(0, 1)], [(1, 0), (2, 0), (3, 1)])
    vec = {t: Fraction(3)}
    swap = {1: 2, 2: 1, 3: 3}
    assert relabel(relabel(vec, swap), swap) == relabel(vec, {1: 1, 2: 2, 3: 3})
