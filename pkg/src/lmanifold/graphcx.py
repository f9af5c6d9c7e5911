"""The weighted modular graph complex.

Generators are oriented classes of connected graphs whose vertices carry
``(genus, weight)`` with genus >= 0 and weight >= 1; the degree is the
number of edges.  The differential expands one vertex into an edge in
every possible way, prepending the new edge to the orientation.
"""
from __future__ import annotations

import functools
import itertools
from fractions import Fraction
from typing import Iterator

from .exactnum import RowReducer
from .graphs import Graph, add_loop, canonical_form, expand_vertex

GraphVector = dict  # canonical Graph -> Fraction
ONE, HALF = Fraction(1), Fraction(1, 2)


def corolla(n: int, w: int, g: int = 0) -> Graph:
    """Single vertex of genus g and weight w carrying tails 1..n."""
    return Graph(((g, w),), (), tuple((l, 0) for l in range(1, n + 1)))


def _splits(w: int, g: int) -> Iterator[tuple[tuple[int, int], tuple[int, int]]]:
    for w1 in range(1, w):
        for g1 in range(g + 1):
            yield (g1, w1), (g - g1, w - w1)


def expansions(G: Graph) -> Iterator[tuple[Graph, Fraction]]:
    """Expansions of G with multiplicities, new edge first; includes vanishing classes.

    The differential is half the sum over ordered splits, so a split into
    two identical halves (a bare vertex, equal decorations) counts 1/2.
    """
    for v in range(G.nv):
        gv, wv = G.vdata[v]
        flags = G.flags_at(v)
        if flags:
            rest = flags[1:]
            for r in range(len(rest) + 1):
                for moved in itertools.combinations(rest, r):
                    for old, new in _splits(wv, gv):
                        yield expand_vertex(G, v, set(moved), old, new), ONE
        else:
            for old, new in _splits(wv, gv):
                if old < new:
                    yield expand_vertex(G, v, set(), old, new), ONE
                elif old == new:
                    yield expand_vertex(G, v, set(), old, new), HALF
        if gv >= 1:
            yield add_loop(G, v), ONE


def differential(G: Graph) -> GraphVector:
    """d(G, or) for the reference orientation of G."""
    out: GraphVector = {}
    for H, mult in expansions(G):
        canon, sign = canonical_form(H)
        if sign:
            x = out.get(canon, 0) + sign * mult
            if x:
                out[canon] = Fraction(x)
            else:
                out.pop(canon)
    return out


def apply_differential(vec: GraphVector) -> GraphVector:
    out: GraphVector = {}
    for G, c in vec.items():
        for H, x in differential(G).items():
            y = out.get(H, 0) + c * x
            if y:
                out[H] = y
            else:
                out.pop(H)
    return out


@functools.lru_cache(maxsize=None)
def _all_classes(n: int, w: int, g: int, p: int) -> tuple[Graph, ...]:
    # every graph contracts to the corolla, so p expansions reach all of degree p
    if p == 0:
        return (canonical_form(corolla(n, w, g))[0],)
    found = set()
    for G in _all_classes(n, w, g, p - 1):
        for H, _ in expansions(G):
            found.add(canonical_form(H)[0])
    return tuple(sorted(found, key=Graph.code))


@functools.lru_cache(maxsize=None)
def generators(n: int, w: int, g: int, p: int) -> tuple[Graph, ...]:
    """Nonvanishing canonical generators of C^p_{g,n,w}."""
    if min(n, w - 1, g, p) < 0:
        return ()
    return tuple(G for G in _all_classes(n, w, g, p) if canonical_form(G)[1])


@functools.lru_cache(maxsize=None)
def _rank(n: int, w: int, g: int, p: int) -> int:
    src = generators(n, w, g, p)
    tgt = generators(n, w, g, p + 1)
    if not src or not tgt:
        return 0
    index = {G: i for i, G in enumerate(tgt)}
    rows = [{index[H]: x for H, x in differential(G).items()} for G in src]
    return RowReducer(len(tgt), rows).rank


def complex_ranks(n: int, w: int, g: int, p: int) -> tuple[int, int]:
    """(number of generators of C^p_{g,n,w}, rank of d on C^p)."""
    return len(generators(n, w, g, p)), _rank(n, w, g, p)


def cohomology_dimension(n: int, w: int, p: int, g: int = 0) -> int:
    dim = len(generators(n, w, g, p))
    return dim - _rank(n, w, g, p) - (_rank(n, w, g, p - 1) if p >= 1 else 0)


def d_squared_failures(n: int, w: int, g: int) -> list[Graph]:
    """Generators G (any degree) with d(d(G)) != 0."""
    bad = []
    p = 0
    while True:
        gens = generators(n, w, g, p)
        if not gens and p > w - 1 + 2 * g + n:
            return bad
        bad.extend(G for G in gens if apply_differential(differential(G)))
        p += 1
