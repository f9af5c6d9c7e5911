"""Small decorated graphs with tails, canonical forms and orientation signs.

A :class:`Graph` stores vertex decorations ``(genus, weight)``, a tuple
of edges ``(u, v)`` (``u == v`` is a loop) and a tuple of tails
``(label, vertex)``.  The tuple order of edges followed by tails is the
reference orientation: the oriented graph ``(G, e_0 ^ .. ^ e_k ^ t_0 ^ ..)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

from .superlin import permutation_sign

PERMUTATION_BUDGET = 400_000


@dataclass(frozen=True)
class Graph:
    vdata: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]
    tails: tuple[tuple[int, int], ...]

    @property
    def nv(self) -> int:
        return len(self.vdata)

    @property
    def ne(self) -> int:
        return len(self.edges)

    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(l for l, _ in self.tails))

    def total_weight(self) -> int:
        return sum(w for _, w in self.vdata)

    def loop_number(self) -> int:
        return self.ne - self.nv + 1

    def total_genus(self) -> int:
        return sum(g for g, _ in self.vdata) + self.loop_number()

    def flags_at(self, v: int) -> list[tuple[str, int, int]]:
        """Flags at ``v``: ``("e", edge, end)`` for edge ends, ``("t", tail, 0)`` for tails."""
        out = []
        for k, (a, b) in enumerate(self.edges):
            if a == v:
                out.append(("e", k, 0))
            if b == v:
                out.append(("e", k, 1))
        for k, (_, x) in enumerate(self.tails):
            if x == v:
                out.append(("t", k, 0))
        return out

    def valence(self, v: int) -> int:
        return len(self.flags_at(v))

    def neighbours(self, v: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            if b == v:
                out.append(a)
        return out

    def is_connected(self) -> bool:
        if self.nv == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in self.neighbours(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.nv

    def is_tree(self) -> bool:
        return self.ne == self.nv - 1 and self.is_connected()

    def validate(self) -> None:
        n = self.nv
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a},{b}) has an endpoint out of range")
        for l, x in self.tails:
            if not 0 <= x < n:
                raise ValueError(f"tail {l} attached to missing vertex {x}")
        labels = [l for l, _ in self.tails]
        if len(set(labels)) != len(labels):
            raise ValueError("tail labels must be distinct")
        for g, w in self.vdata:
            if g < 0 or w < 1:
                raise ValueError("vertex genus must be >= 0 and weight >= 1")
        if not self.is_connected():
            raise ValueError("graph is not connected")

    def code(self) -> str:
        """Compact text code, stable for canonical graphs."""
        vd = ",".join(f"{g}:{w}" for g, w in self.vdata)
        ed = ",".join(f"{a}-{b}" for a, b in self.edges)
        tl = ",".join(f"{l}@{x}" for l, x in self.tails)
        return f"V[{vd}]E[{ed}]T[{tl}]"

    @classmethod
    def from_code(cls, code: str) -> "Graph":
        try:
            vpart = code[code.index("V[") + 2: code.index("]E[")]
            epart = code[code.index("]E[") + 3: code.index("]T[")]
            tpart = code[code.index("]T[") + 3: code.rindex("]")]
            vdata = tuple(tuple(int(x) for x in item.split(":")) for item in vpart.split(",") if item)
            edges = tuple(tuple(int(x) for x in item.split("-")) for item in epart.split(",") if item)
            tails = tuple(tuple(int(x) for x in item.split("@")) for item in tpart.split(",") if item)
        except ValueError as exc:
            raise ValueError(f"malformed graph code {code!r}") from exc
        return cls(vdata, edges, tails)


def tree(n_vertices: int, edges, tails) -> Graph:
    """Convenience constructor for undecorated trees (genus 0, weight 1)."""
    return Graph(((0, 1),) * n_vertices, tuple(tuple(e) for e in edges), tuple(tuple(t) for t in tails))


def _refine(g: Graph) -> list[int]:
    n = g.nv
    tails_at = [[] for _ in range(n)]
    for l, x in g.tails:
        tails_at[x].append(l)
    loops = [0] * n
    for a, b in g.edges:
        if a == b:
            loops[a] += 1
    init = [(g.vdata[v], tuple(sorted(tails_at[v])), len(g.neighbours(v)), loops[v]) for v in range(n)]
    ranks = {sig: i for i, sig in enumerate(sorted(set(init)))}
    colour = [ranks[s] for s in init]
    nbrs = [g.neighbours(v) for v in range(n)]
    while True:
        sigs = [(colour[v], tuple(sorted(colour[u] for u in nbrs[v]))) for v in range(n)]
        ranks = {sig: i for i, sig in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == len(set(colour)):
            return new
        colour = new


def _orderings(colour: list[int]) -> Iterator[list[int]]:
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colour):
        cells.setdefault(c, []).append(v)
    ordered = [cells[c] for c in sorted(cells)]
    count = math.prod(math.factorial(len(c)) for c in ordered)
    if count > PERMUTATION_BUDGET:
        raise RuntimeError(f"canonicalization budget exceeded ({count} orderings)")
    for combo in itertools.product(*(itertools.permutations(c) for c in ordered)):
        yield [v for cell in combo for v in cell]


def canonical_form(g: Graph) -> tuple[Graph, int]:
    """Return ``(canonical graph, sign)`` with ``(g, ref) = sign * (canon, ref)``.

    ``sign`` is 0 when an automorphism acts by an odd permutation on the
    edges and tails (the oriented class vanishes).
    """
    n = g.nv
    colour = _refine(g)
    best_key = None
    best_orders: list[list[int]] = []
    for order in _orderings(colour):
        pos = [0] * n
        for i, v in enumerate(order):
            pos[v] = i
        edges = tuple(sorted((min(pos[a], pos[b]), max(pos[a], pos[b])) for a, b in g.edges))
        tails = tuple(sorted((l, pos[x]) for l, x in g.tails))
        key = (tuple(g.vdata[v] for v in order), edges, tails)
        if best_key is None or key < best_key:
            best_key = key
            best_orders = [pos]
        elif key == best_key:
            best_orders.append(pos)
    vdata, edges, tails = best_key
    canon = Graph(vdata, edges, tails)
    if len(set(edges)) != len(edges):
        return canon, 0
    signs = {_relabel_sign(g, pos) for pos in best_orders}
    if len(signs) > 1:
        return canon, 0
    return canon, signs.pop()


def _relabel_sign(g: Graph, pos: list[int]) -> int:
    ne = g.ne
    ekeys = [((min(pos[a], pos[b]), max(pos[a], pos[b])), k) for k, (a, b) in enumerate(g.edges)]
    eorder = [k for _, k in sorted(ekeys)]
    torder = [ne + k for _, k in sorted((l, k) for k, (l, _) in enumerate(g.tails))]
    return permutation_sign(eorder + torder)


def expand_vertex(g: Graph, v: int, to_new: set, old_data: tuple[int, int], new_data: tuple[int, int]) -> Graph:
    """Split ``v`` into ``v`` and a new vertex joined by a new first edge.

    ``to_new`` holds the flags (as returned by :meth:`Graph.flags_at`)
    moved to the new vertex.
    """
    nv = g.nv
    edges = [list(e) for e in g.edges]
    tails = [list(t) for t in g.tails]
    for kind, k, end in to_new:
        if kind == "e":
            edges[k][end] = nv
        else:
            tails[k][1] = nv
    vdata = list(g.vdata)
    vdata[v] = old_data
    vdata.append(new_data)
    return Graph(tuple(vdata), ((v, nv),) + tuple(tuple(e) for e in edges), tuple(tuple(t) for t in tails))


def add_loop(g: Graph, v: int) -> Graph:
    gen, w = g.vdata[v]
    vdata = list(g.vdata)
    vdata[v] = (gen - 1, w)
    return Graph(tuple(vdata), ((v, v),) + g.edges, g.tails)


def contract_edge(g: Graph, k: int) -> Graph:
    """Contract edge ``k`` (merging weights; a loop adds one to the genus)."""
    a, b = g.edges[k]
    rest = g.edges[:k] + g.edges[k + 1:]
    vdata = list(g.vdata)
    if a == b:
        gen, w = vdata[a]
        vdata[a] = (gen + 1, w)
        return Graph(tuple(vdata), rest, g.tails)
    lo, hi = min(a, b), max(a, b)
    vdata[lo] = (vdata[a][0] + vdata[b][0], vdata[a][1] + vdata[b][1])
    del vdata[hi]

    def m(x):
        x = lo if x == hi else x
        return x - 1 if x > hi else x

    return Graph(tuple(vdata), tuple((m(x), m(y)) for x, y in rest), tuple((l, m(x)) for l, x in g.tails))
