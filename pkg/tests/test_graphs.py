from hypothesis import given, settings
from hypothesis import strategies as st

from lmanifold.graphs import Graph, add_loop, canonical_form, contract_edge, expand_vertex, tree
from lmanifold.superlin import permutation_sign


@st.composite
def graphs(draw):
    nv = draw(st.integers(1, 5))
    edges = [(draw(st.integers(0, v - 1)), v) for v in range(1, nv)]  # spanning tree
    for _ in range(draw(st.integers(0, 2))):
        edges.append((draw(st.integers(0, nv - 1)), draw(st.integers(0, nv - 1))))
    n_tails = draw(st.integers(0, 3))
    tails = [(l, draw(st.integers(0, nv - 1))) for l in range(1, n_tails + 1)]
    vdata = [(draw(st.integers(0, 1)), draw(st.integers(1, 2))) for _ in range(nv)]
    return Graph(tuple(vdata), tuple(edges), tuple(tails))


@settings(max_examples=150, deadline=None)
@given(graphs(), st.data())
def test_canonical_form_is_invariant(g, data):
    vperm = data.draw(st.permutations(list(range(g.nv))))
    eperm = data.draw(st.permutations(list(range(g.ne))))
    flips = data.draw(st.lists(st.booleans(), min_size=g.ne, max_size=g.ne))
    edges = []
    for k in eperm:
        a, b = g.edges[k]
        a, b = vperm[a], vperm[b]
        edges.append((b, a) if flips[k] else (a, b))
    vdata = [None] * g.nv
    for v in range(g.nv):
        vdata[vperm[v]] = g.vdata[v]
    h = Graph(tuple(vdata), tuple(edges), tuple((l, vperm[x]) for l, x in g.tails))
    (cg, sg), (ch, sh) = canonical_form(g), canonical_form(h)
    assert cg == ch
    assert sh == sg * permutation_sign(eperm)


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_canonical_form_idempotent(g):
    c, s = canonical_form(g)
    c2, s2 = canonical_form(c)
    assert c2 == c
    assert s2 in (0, 1)
    if s:
        assert s2 == 1


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_code_roundtrip(g):
    assert Graph.from_code(g.code()) == g


def test_parallel_edges_vanish():
    assert canonical_form(tree(2, [(0, 1), (0, 1)], []))[1] == 0


def test_expand_then_contract():
    g = Graph(((0, 3),), (), ((1, 0), (2, 0)))
    h = expand_vertex(g, 0, {("t", 1, 0)}, (0, 1), (0, 2))
    assert h.edges[0] == (0, 1) and h.tails == ((1, 0), (2, 1))
    assert contract_edge(h, 0) == g


def test_loop_spends_genus():
    g = Graph(((1, 1),), (), ((1, 0),))
    h = add_loop(g, 0)
    assert h.vdata == ((0, 1),) and h.edges == ((0, 0),)
    assert h.total_genus() == g.total_genus() == 1
    assert contract_edge(h, 0) == g


def test_validate():
    import pytest

    with pytest.raises(ValueError):
        Graph(((0, 1), (0, 1)), (), ()).validate()
    with pytest.raises(ValueError):
        Graph(((0, 0),), (), ()).validate()
    with pytest.raises(ValueError):
        Graph(((0, 1),), (), ((1, 0), (1, 0))).validate()
