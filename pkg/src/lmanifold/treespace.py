"""Tail-labelled trees, the relations R(tau, v, f) and the graded spaces H^p_S.

Trees are :class:`~lmanifold.graphs.Graph` objects with trivial vertex
decorations.  Signs come from orientations in the top exterior power of
the lattice on internal edges and tails; a new edge produced by a
relation is wedged in front of the existing orientation.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .exactnum import RowReducer, SparseMatrix, nullspace_basis, quotient_dimension
from .graphs import Graph, canonical_form, expand_vertex
from .superlin import permutation_sign

TreeVector = dict  # canonical Graph -> Fraction, no zero coefficients
PLAIN = (0, 1)


def labelset(S) -> tuple[int, ...]:
    if isinstance(S, int):
        return tuple(range(1, S + 1))
    return tuple(sorted(S))


def corolla(S) -> Graph:
    S = labelset(S)
    return Graph((PLAIN,), (), tuple((l, 0) for l in S))


def add_term(vec: TreeVector, g: Graph, coeff) -> None:
    canon, sign = canonical_form(g)
    if not sign or not coeff:
        return
    v = vec.get(canon, 0) + sign * coeff
    if v:
        vec[canon] = Fraction(v)
    else:
        vec.pop(canon, None)


def oriented(g: Graph, coeff=1) -> TreeVector:
    vec: TreeVector = {}
    add_term(vec, g, coeff)
    return vec


def canonicalize(g: Graph) -> tuple[Graph, int]:
    """Canonical representative and orientation sign (0 for a vanishing class)."""
    g.validate()
    if not g.is_tree():
        raise ValueError("not a tree")
    return canonical_form(g)


def vec_add(*vecs: TreeVector, coeffs: Iterable = None) -> TreeVector:
    out: TreeVector = {}
    coeffs = list(coeffs) if coeffs is not None else [1] * len(vecs)
    for vec, c in zip(vecs, coeffs):
        for k, x in vec.items():
            y = out.get(k, 0) + c * x
            if y:
                out[k] = Fraction(y)
            else:
                out.pop(k, None)
    return out


def splittings(g: Graph, v: int, keep=None):
    """Subsets of flags at ``v`` moved to a new vertex; ``keep`` stays behind."""
    flags = [f for f in g.flags_at(v) if f != keep]
    for r in range(len(flags) + 1):
        for sub in itertools.combinations(flags, r):
            yield set(sub)


@functools.lru_cache(maxsize=None)
def tree_classes(S: tuple[int, ...], p: int) -> tuple[Graph, ...]:
    """All isomorphism classes of S-trees with p edges, vanishing ones included."""
    if p == 0:
        return (canonical_form(corolla(S))[0],)
    found = set()
    for t in tree_classes(S, p - 1):
        for v in range(t.nv):
            for sub in splittings(t, v):
                found.add(canonical_form(expand_vertex(t, v, sub, PLAIN, PLAIN))[0])
    return tuple(sorted(found, key=Graph.code))


def has_dead_end(t: Graph) -> bool:
    """True when some vertex is the configuration killed by the relations.

    That is a vertex whose flags are edges to leaf vertices (no tails, valence
    one) together with exactly one further flag.
    """
    for v in range(t.nv):
        flags = t.flags_at(v)
        leaves = 0
        for kind, k, end in flags:
            if kind == "e":
                other = t.edges[k][1 - end]
                if other != v and t.valence(other) == 1 and not any(x == other for _, x in t.tails):
                    leaves += 1
        if leaves >= 1 and len(flags) - leaves == 1 and t.nv >= 3:
            return True
    return False


def enumerate_trees(S, p: int, reduced: bool = False) -> list[Graph]:
    """Nonvanishing oriented tree classes with p edges (canonical orientation)."""
    S = labelset(S)
    out = [t for t in tree_classes(S, p) if canonical_form(t)[1]]
    if reduced:
        out = [t for t in out if not has_dead_end(t)]
    return out


def relation_vector(t: Graph, v: int, f) -> TreeVector:
    """R(t, v, f): the signed sum of all splittings of v keeping f at v."""
    flags = t.flags_at(v)
    if f not in flags:
        raise ValueError(f"flag {f} is not attached to vertex {v}")
    vec: TreeVector = {}
    for sub in splittings(t, v, keep=f):
        add_term(vec, expand_vertex(t, v, sub, PLAIN, PLAIN), 1)
    return vec


def relations(S, p: int) -> list[TreeVector]:
    """All relation vectors living in degree p."""
    S = labelset(S)
    if p == 0:
        return []
    out = []
    for t in tree_classes(S, p - 1):
        for v in range(t.nv):
            flags = t.flags_at(v)
            if flags:
                vec = relation_vector(t, v, flags[0])
                if vec:
                    out.append(vec)
    return out


@dataclass
class HSpace:
    """H^p_S as (generators, relation row space); quotient coordinates on free columns."""

    S: tuple[int, ...]
    p: int
    basis: list[Graph]
    index: dict
    reducer: RowReducer

    @property
    def dim(self) -> int:
        return len(self.basis) - self.reducer.rank

    def coords(self, vec: TreeVector) -> dict[int, Fraction]:
        return {self.index[k]: x for k, x in vec.items()}

    def reduce(self, vec: TreeVector) -> TreeVector:
        red = self.reducer.reduce(self.coords(vec))
        return {self.basis[i]: x for i, x in red.items()}

    def is_zero(self, vec: TreeVector) -> bool:
        return not self.reducer.reduce(self.coords(vec))

    def quotient_basis(self) -> list[Graph]:
        return [self.basis[i] for i in self.reducer.free_columns]

    def orthogonal(self, vec: TreeVector) -> bool:
        """Whether ``vec`` pairs to zero with every relation (the dual model of H)."""
        for rel in relations(self.S, self.p):
            if sum((x * vec.get(k, 0) for k, x in rel.items()), Fraction(0)):
                return False
        return True


@functools.lru_cache(maxsize=None)
def h_space(S, p: int) -> HSpace:
    S = labelset(S)
    basis = enumerate_trees(S, p)
    index = {t: i for i, t in enumerate(basis)}
    rows = [{index[k]: x for k, x in rel.items()} for rel in relations(S, p)]
    return HSpace(S, p, basis, index, RowReducer(len(basis), rows))


def h_dimension(S, p: int) -> int:
    if p < 0:
        raise ValueError("degree must be non-negative")
    hs = h_space(labelset(S), p)
    n = len(hs.basis)
    rel = SparseMatrix(hs.reducer.rank, n, [hs.reducer.pivots[c] for c in sorted(hs.reducer.pivots)])
    return quotient_dimension(SparseMatrix.identity(n), rel)


def stable_trees(S, k: int) -> list[Graph]:
    S = labelset(S)
    return [t for t in tree_classes(S, k) if all(t.valence(v) >= 3 for v in range(t.nv))]


def metric_stable_tree_count(S, p: int) -> int:
    """Stable S-trees with internal lengths >= 1 and tail lengths >= 0, total length p."""
    S = labelset(S)
    n = len(S)
    if n < 3:
        raise ValueError("metric stable trees need at least three tails")
    total = 0
    for k in range(0, min(p, n - 3) + 1):
        # lengths: k internal edges >= 1 and n tails >= 0 summing to p
        total += len(stable_trees(S, k)) * math.comb(p + n - 1, k + n - 1)
    return total


def Partition(S1, S2) -> frozenset:
    """Unordered partition of the tail set, as a frozenset of two frozensets."""
    a, b = frozenset(S1), frozenset(S2)
    if a & b:
        raise ValueError("partition blocks overlap")
    return frozenset((a, b))


def _side(t: Graph, start: int, banned_edge: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for k, (a, b) in enumerate(t.edges):
            if k == banned_edge:
                continue
            for u, w in ((a, b), (b, a)):
                if u == x and w not in seen:
                    seen.add(w)
                    stack.append(w)
    return seen


def edge_partition(t: Graph, k: int) -> frozenset:
    a, _ = t.edges[k]
    side = _side(t, a, k)
    S = set(t.labels())
    s1 = {l for l, x in t.tails if x in side}
    return Partition(s1, S - s1)


def tail_partition(t: Graph, k: int) -> frozenset:
    l = t.tails[k][0]
    return Partition({l}, set(t.labels()) - {l})


def is_trivial(sigma: frozenset) -> bool:
    return any(not part for part in sigma) or len(sigma) < 2


def compatibility(sigma: frozenset, tau: frozenset) -> int:
    """Number of distinct non-empty blocks S_i & S'_j: 2 equal, 3 compatible, 4 incompatible."""
    blocks = {a & b for a in sigma for b in tau}
    blocks.discard(frozenset())
    return len(blocks)


def boundary_map(vec: TreeVector, sigma: frozenset, plus: int = 0) -> dict:
    """phi_sigma: cut along the edge inducing sigma, new tails labelled ``plus``.

    Returns a dict ``(tree1, tree2) -> coeff`` where ``tree1`` carries the
    block of sigma containing the smallest label.  The orientation
    ``e ^ A ^ B`` of the cut tree (e the cut edge, A and B the edges and
    tails of the two halves) is sent to ``(A ^ +) (x) (+ ^ B)``.
    """
    out: dict = {}
    s1, s2 = sorted(sigma, key=lambda b: (min(b) if b else float("inf"), len(b)))
    for t, c in vec.items():
        for k in range(t.ne):
            if edge_partition(t, k) != sigma:
                continue
            for key, x in _cut(t, k, s1, plus).items():
                y = out.get(key, 0) + c * x
                if y:
                    out[key] = Fraction(y)
                else:
                    out.pop(key, None)
    return out


def _cut(t: Graph, k: int, s1: frozenset, plus: int) -> dict:
    a, b = t.edges[k]
    side_a = _side(t, a, k)
    if {l for l, x in t.tails if x in side_a} != set(s1):
        a, b = b, a
        side_a = _side(t, a, k)
    halves = []
    order = []  # items of the cut tree in the order e, A, B
    for root, side, plus_first in ((a, side_a, False), (b, set(range(t.nv)) - side_a, True)):
        verts = sorted(side)
        ren = {v: i for i, v in enumerate(verts)}
        eidx = [j for j, (u, w) in enumerate(t.edges) if j != k and u in side]
        tidx = [j for j, (_, x) in enumerate(t.tails) if x in side]
        edges = tuple((ren[t.edges[j][0]], ren[t.edges[j][1]]) for j in eidx)
        tails = tuple((t.tails[j][0], ren[t.tails[j][1]]) for j in tidx)
        # reference orientation of the half: its edges, then its tails; + placed per side
        half = Graph(((0, 1),) * len(verts), edges, tails + ((plus, ren[root]),))
        n_items = len(eidx) + len(tidx)
        if plus_first:
            # + ^ B  ->  move + (last reference item) to the front
            sgn = -1 if n_items % 2 else 1
        else:
            sgn = 1
        halves.append((half, sgn))
        order.extend([("e", j) for j in eidx] + [("t", j) for j in tidx])
    ref = [("e", j) for j in range(t.ne)] + [("t", j) for j in range(len(t.tails))]
    target = [("e", k)] + order
    perm = [ref.index(x) for x in target]
    sign = permutation_sign(perm) * halves[0][1] * halves[1][1]
    c1, s_1 = canonical_form(halves[0][0])
    c2, s_2 = canonical_form(halves[1][0])
    if not (s_1 and s_2):
        return {}
    return {(c1, c2): Fraction(sign * s_1 * s_2)}


def tensor_reduce(tensor: dict) -> dict:
    """Image of ``sum c (t1 (x) t2)`` in H (x) H, in quotient coordinates of both factors."""
    by_deg: dict = {}
    for (t1, t2), c in tensor.items():
        by_deg.setdefault((t1.labels(), t1.ne, t2.labels(), t2.ne), {})[(t1, t2)] = c
    out = {}
    for (l1, p1, l2, p2), part in by_deg.items():
        h1, h2 = h_space(l1, p1), h_space(l2, p2)
        right: dict = {}
        for (t1, t2), c in part.items():
            right.setdefault(t2, {})[t1] = c
        stage: dict = {}
        for t2, left in right.items():
            for i, x in h1.reducer.reduce(h1.coords(left)).items():
                stage.setdefault(i, {})[t2] = x
        for i, vec in stage.items():
            for j, x in h2.reducer.reduce(h2.coords(vec)).items():
                out[(l1, p1, i, l2, p2, j)] = x
    return out


def annihilator_basis(S, p: int) -> list[TreeVector]:
    """Basis of the vectors orthogonal to every relation (the dual model of H^p_S)."""
    hs = h_space(labelset(S), p)
    rels = relations(hs.S, p)
    m = SparseMatrix(len(rels), len(hs.basis), [hs.coords(r) for r in rels])
    return [{hs.basis[i]: x for i, x in enumerate(v) if x} for v in nullspace_basis(m)]


def pairing(a: TreeVector, b: TreeVector) -> Fraction:
    if len(a) > len(b):
        a, b = b, a
    return sum((x * b.get(k, 0) for k, x in a.items()), Fraction(0))


def tensor_orthogonal(tensor: dict) -> bool:
    """Whether a tensor lies in (relations)^perp (x) (relations)^perp."""
    left: dict = {}
    right: dict = {}
    for (t1, t2), c in tensor.items():
        left.setdefault(t2, {})[t1] = c
        right.setdefault(t1, {})[t2] = c
    for vecs in (left, right):
        for vec in vecs.values():
            some = next(iter(vec))
            for rel in relations(some.labels(), some.ne):
                if pairing(rel, vec):
                    return False
    return True


def flag_subset(t: Graph, v: int, flag) -> frozenset:
    """Tail labels reached through ``flag`` away from ``v``."""
    kind, k, end = flag
    if kind == "t":
        return frozenset({t.tails[k][0]})
    other = t.edges[k][1 - end]
    side = _side(t, other, k)
    return frozenset(l for l, x in t.tails if x in side)


def has_leaf(t: Graph) -> bool:
    return any(t.valence(v) == 1 and not any(x == v for _, x in t.tails) for v in range(t.nv)) and t.nv > 1


def _subdivide(t: Graph, kind: str, k: int) -> Graph:
    nv = t.nv
    vdata = t.vdata + (PLAIN,)
    if kind == "e":
        a, b = t.edges[k]
        edges = ((a, nv),) + t.edges[:k] + ((nv, b),) + t.edges[k + 1:]
        return Graph(vdata, edges, t.tails)
    l, x = t.tails[k]
    tails = t.tails[:k] + ((l, nv),) + t.tails[k + 1:]
    return Graph(vdata, ((x, nv),) + t.edges, tails)


def _unsigned(g: Graph) -> TreeVector:
    canon, sign = canonical_form(g)
    return {canon: Fraction(1)} if sign else {}


def partition_times_tree(sigma: frozenset, t: Graph) -> TreeVector:
    """m(sigma) m(t) for a dead-end-free tree, in canonical orientation."""
    if is_trivial(sigma):
        raise ValueError("products are defined for non-trivial partitions")
    parts = [edge_partition(t, k) for k in range(t.ne)]
    if any(compatibility(sigma, q) == 4 for q in parts):
        return {}
    for k, q in enumerate(parts):
        if q == sigma:
            return _unsigned(_subdivide(t, "e", k))
    for k in range(len(t.tails)):
        if tail_partition(t, k) == sigma:
            return _unsigned(_subdivide(t, "t", k))
    a, b = tuple(sigma)
    for v in range(t.nv):
        flags = t.flags_at(v)
        subs = [flag_subset(t, v, f) for f in flags]
        if all(s <= a or s <= b for s in subs):
            new = {f for f, s in zip(flags, subs) if s <= a}
            return _unsigned(expand_vertex(t, v, new, PLAIN, PLAIN))
    raise AssertionError("compatible partition found no splitting vertex")


def product(x: TreeVector, y: TreeVector) -> TreeVector:
    """Commutative product m(tau1) m(tau2) = prod over edges of tau1 of m(sigma(e)) m(tau2)."""
    out: TreeVector = {}
    for t1, c1 in x.items():
        if has_leaf(t1):
            raise ValueError("product needs trees without leaf vertices")
        for t2, c2 in y.items():
            if has_leaf(t2):
                raise ValueError("product needs trees without leaf vertices")
            if t1.labels() != t2.labels():
                raise ValueError("tail sets differ")
            if len(t1.labels()) <= 1:
                if t1.ne == 0:
                    cur = {t2: Fraction(1)}
                elif t2.ne == 0:
                    cur = {t1: Fraction(1)}
                else:
                    cur = {}
            else:
                cur = {t2: Fraction(1)}
                for k in range(t1.ne):
                    sigma = edge_partition(t1, k)
                    nxt: TreeVector = {}
                    for t, c in cur.items():
                        nxt = vec_add(nxt, partition_times_tree(sigma, t), coeffs=[1, c])
                    cur = nxt
            out = vec_add(out, cur, coeffs=[1, c1 * c2])
    return out


def partition_tree(S, sigma: frozenset) -> Graph:
    """Canonical two-vertex tree realising a partition (a tree with a leaf if trivial)."""
    S = labelset(S)
    a, b = sorted(sigma, key=lambda s: sorted(s))
    if not a or not b:
        a = a or b
        b = frozenset()
    tails = tuple((l, 0 if l in a else 1) for l in S)
    return canonical_form(Graph((PLAIN, PLAIN), ((0, 1),), tails))[0]


def transplant(sigma: frozenset, t: Graph) -> TreeVector:
    """The transplanting formula for m(sigma) m(t) when sigma = sigma(e).

    Both the inserted tree and the transplanted trees carry the
    orientation e' ^ or(t); the result is rescaled so that it is comparable
    with the canonical-orientation value of :func:`partition_times_tree`.
    """
    for k in range(t.ne):
        if edge_partition(t, k) != sigma:
            continue
        _, s_ins = canonical_form(_subdivide(t, "e", k))
        v1, v2 = t.edges[k]
        out: TreeVector = {}
        for end, v in ((0, v1), (1, v2)):
            flags = [f for f in t.flags_at(v) if f != ("e", k, end)]
            for r in range(1, len(flags) + 1):
                for sub in itertools.combinations(flags, r):
                    g = _move_flags(_subdivide(t, "e", k), sub, t.nv)
                    canon, s = canonical_form(g)
                    out = vec_add(out, {canon: Fraction(-s * s_ins, 2)})
        return out
    raise ValueError("sigma is not induced by an edge of t")


def _move_flags(g: Graph, sub, new: int) -> Graph:
    # flags refer to the unsubdivided tree; its edges sit one slot later in g
    edges = [list(e) for e in g.edges]
    tails = [list(x) for x in g.tails]
    for kind, j, end in sub:
        if kind == "e":
            edges[j + 1][end] = new
        else:
            tails[j][1] = new
    return Graph(g.vdata, tuple(tuple(e) for e in edges), tuple(tuple(x) for x in tails))


def nontrivial_partitions(S) -> list[frozenset]:
    """Unordered two-block partitions of S with both blocks non-empty."""
    S = labelset(S)
    if len(S) < 2:
        return []
    first, rest = S[0], S[1:]
    out = []
    for r in range(len(rest)):
        for extra in itertools.combinations(rest, r):
            a = {first, *extra}
            out.append(Partition(a, set(S) - a))
    return sorted(out, key=lambda q: sorted(sorted(b) for b in q))


def monomials(n_gens: int, degree: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations_with_replacement(range(n_gens), degree))


def monomial_image(S, parts: list[frozenset], mono: tuple[int, ...]) -> TreeVector:
    out: TreeVector = {corolla(S): Fraction(1)}
    for i in mono:
        out = product({partition_tree(S, parts[i]): Fraction(1)}, out)
    return out


def _linear_b_relations(S, parts: list[frozenset]) -> list[dict[int, Fraction]]:
    """Type (b) generators in the D-variables.

    Each relation R(corolla, v, s) reads L + sum_sigma c_sigma m(sigma), where
    L is the tree carrying every tail on one vertex and a bare leaf.  L is
    not a generator, so only the differences between labels s survive.
    """
    S = labelset(S)
    index = {partition_tree(S, q): i for i, q in enumerate(parts)}
    c = corolla(S)
    per_label = []
    for k in range(len(S)):
        vec = relation_vector(c, 0, ("t", k, 0))
        lin = {index[t]: x for t, x in vec.items() if t in index}
        lead = {t: x for t, x in vec.items() if t not in index}
        per_label.append((lead, lin))
    out = []
    lead0, lin0 = per_label[0]
    for lead, lin in per_label[1:]:
        if lead != lead0:
            raise AssertionError("leaf-tree coefficients differ between labels")
        diff = dict(lin)
        for i, x in lin0.items():
            diff[i] = diff.get(i, 0) - x
        out.append({i: Fraction(x) for i, x in diff.items() if x})
    return out


@dataclass
class PresentationReport:
    S: tuple[int, ...]
    quotient_dims: list[int]
    h_dims: list[int]
    image_ranks: list[int]
    ideal_images_vanish: bool
    commutative: bool
    associative: bool
    b_relations_zero: bool

    @property
    def dims_match(self) -> bool:
        return self.quotient_dims == self.h_dims

    @property
    def ring_map_iso(self) -> bool:
        return self.image_ranks == self.h_dims and self.ideal_images_vanish

    @property
    def ok(self) -> bool:
        return self.dims_match and self.ring_map_iso and self.commutative and self.associative


def presentation_check(S, max_degree: int, samples: int = 40) -> PresentationReport:
    """Compare F_S / I_S with H_S degree by degree and test D_sigma -> m(sigma)."""
    S = labelset(S)
    if not S:
        raise ValueError("S must be non-empty")
    parts = nontrivial_partitions(S)
    n = len(parts)
    incompatible = [(i, j) for i in range(n) for j in range(i + 1, n) if compatibility(parts[i], parts[j]) == 4]
    blin = _linear_b_relations(S, parts) if n else []
    q_dims, h_dims, ranks = [], [], []
    vanish = True
    for d in range(max_degree + 1):
        monos = monomials(n, d)
        mindex = {m: i for i, m in enumerate(monos)}
        ideal = []
        if d >= 2:
            for i, j in incompatible:
                for rest in monomials(n, d - 2):
                    ideal.append({mindex[tuple(sorted((i, j) + rest))]: Fraction(1)})
        if d >= 1:
            for rel in blin:
                for rest in monomials(n, d - 1):
                    row: dict[int, Fraction] = {}
                    for g, x in rel.items():
                        k = mindex[tuple(sorted((g,) + rest))]
                        row[k] = row.get(k, 0) + x
                    ideal.append({k: x for k, x in row.items() if x})
        red = RowReducer(len(monos), ideal)
        q_dims.append(len(monos) - red.rank)
        hs = h_space(S, d)
        h_dims.append(hs.dim)
        images = [hs.reducer.reduce(hs.coords(monomial_image(S, parts, m))) for m in monos]
        ranks.append(RowReducer(len(hs.basis), [images[c] for c in red.free_columns]).rank)
        for row in ideal:
            combo: dict[int, Fraction] = {}
            for k, x in row.items():
                for c, y in images[k].items():
                    combo[c] = combo.get(c, 0) + x * y
            if hs.reducer.reduce(combo):
                vanish = False
    commutative = associative = True
    trees = [partition_tree(S, q) for q in parts]
    for a, b, c in itertools.islice(itertools.product(range(n), repeat=3), samples):
        ma, mb, mc = ({trees[i]: Fraction(1)} for i in (a, b, c))
        if product(ma, mb) != product(mb, ma):
            commutative = False
        left, right = product(product(ma, mb), mc), product(ma, product(mb, mc))
        if not h_space(S, 3).is_zero(vec_add(left, right, coeffs=[1, -1])):
            associative = False
    return PresentationReport(S, q_dims, h_dims, ranks, vanish, commutative, associative, all(not r for r in blin))
