"""Cohomological field theories built from curved cyclic L-infinity structures.

``I_S(x) = sum_tau Y_tau(x) m(tau)``, where ``Y_tau`` feeds the inputs and
one Casimir element per internal edge into the cyclic forms sitting at the
vertices.  Values are stored in the tree basis (one coefficient per
canonical tree class); membership in the annihilator of the relations is
checked separately, and is equivalent to the Jacobi identities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import Graph, canonical_form
from .linfty import LinftyStructure, cyclic_form
from .superlin import koszul_sign, permutation_sign
from .treespace import (
    TreeVector,
    boundary_map,
    enumerate_trees,
    labelset,
    nontrivial_partitions,
    pairing,
    relations,
)

PLUS = 0  # label of the extra tail created by cutting an edge


class _Forms:
    """Cyclic forms Y_k and the Casimir entries of one structure."""

    def __init__(self, L: LinftyStructure):
        self.L = L
        self.Y = {n + 1: cyclic_form(L, n) for n in range(L.max_arity + 1)}
        ginv = L.pairing.inverse()
        self.delta = [(a, b, ginv[a][b]) for a in range(L.dim) for b in range(L.dim) if ginv[a][b]]


def _planar_sequence(tau: Graph, flag_orders, root_label: int) -> list:
    """Edges and tails read off a planar structure, starting from a root tail."""
    root_tail = next(k for k, (l, _) in enumerate(tau.tails) if l == root_label)
    root = tau.tails[root_tail][1]
    out = [("t", root_tail)]

    def read(v: int, out_flag) -> None:
        order = list(flag_orders[v])
        i = order.index(out_flag)
        for kind, k, end in order[i + 1:] + order[:i]:
            if kind == "t":
                out.append(("t", k))
            else:
                out.append(("e", k))
                read(tau.edges[k][1 - end], ("e", k, 1 - end))

    read(root, ("t", root_tail, 0))
    return out


def orientation_sign(tau: Graph, flag_orders, root_label: int) -> int:
    """Sign of the planar reading against the reference orientation of tau."""
    seq = _planar_sequence(tau, flag_orders, root_label)
    ref = [("e", k) for k in range(tau.ne)] + [("t", k) for k in range(len(tau.tails))]
    return permutation_sign([ref.index(x) for x in seq])


def _contract(forms: _Forms, tau: Graph, inputs, label_order, flag_orders) -> Fraction:
    par = forms.L.space.parities
    n = len(label_order)
    pos = {l: i for i, l in enumerate(label_order)}
    blocks = []
    for v in range(tau.nv):
        block = []
        for kind, k, end in flag_orders[v]:
            block.append(pos[tau.tails[k][0]] if kind == "t" else n + 2 * k + end)
        blocks.append(block)
    perm = [p for b in blocks for p in b]
    total = Fraction(0)
    for choice in itertools.product(forms.delta, repeat=tau.ne):
        word = list(inputs)
        coeff = Fraction(1)
        for a, b, d in choice:
            word += [a, b]
            coeff *= d
        value = coeff
        for block in blocks:
            y = forms.Y[len(block)].get(tuple(word[p] for p in block))
            if not y:
                value = 0
                break
            value *= y
        if not value:
            continue
        wpar = [par[i] for i in word]
        sign = koszul_sign(wpar, perm)
        seen = 0
        for block in blocks:
            # Y_v jumps over the blocks placed before it
            if (len(block) - 1) % 2 and seen % 2:
                sign = -sign
            seen += sum(wpar[p] for p in block)
        total += sign * value
    return total


def y_tau(L: LinftyStructure, tau: Graph, inputs, label_order=None, flag_orders=None, forms: _Forms | None = None) -> Fraction:
    """The contraction Y_tau on basis inputs, listed in ``label_order`` (sorted labels by default)."""
    label_order = list(label_order) if label_order is not None else list(tau.labels())
    if sorted(label_order) != list(tau.labels()):
        raise ValueError("label order does not match the tails of tau")
    if len(inputs) != len(label_order):
        raise ValueError("one input per tail is required")
    for v in range(tau.nv):
        if tau.valence(v) - 1 > L.max_arity:
            raise ValueError(f"vertex {v} has valence {tau.valence(v)} beyond the available operations")
    forms = forms or _Forms(L)
    flag_orders = flag_orders or [tau.flags_at(v) for v in range(tau.nv)]
    return _contract(forms, tau, inputs, label_order, flag_orders)


@dataclass
class CohFTMap:
    source: LinftyStructure
    labels: tuple  # input order of the tails
    max_degree: int
    values: dict = field(default_factory=dict)  # input tuple -> TreeVector

    def __call__(self, inputs) -> TreeVector:
        return self.values.get(tuple(inputs), {})


def _tree_term(forms: _Forms, tau: Graph, inputs, label_order) -> Fraction:
    flags = [tau.flags_at(v) for v in range(tau.nv)]
    y = _contract(forms, tau, inputs, label_order, flags)
    return y * orientation_sign(tau, flags, label_order[0]) if y else Fraction(0)


def build_I(L: LinftyStructure, labels, max_degree: int, forms: _Forms | None = None) -> CohFTMap:
    """I_S on every basis input tuple; ``labels`` (an int n means 1..n) fixes the input order."""
    label_order = list(range(1, labels + 1)) if isinstance(labels, int) else list(labels)
    if not label_order:
        raise ValueError("at least one tail is needed")
    forms = forms or _Forms(L)
    S = labelset(label_order)
    trees = [t for p in range(max_degree + 1) for t in enumerate_trees(S, p)
             if all(t.valence(v) - 1 <= L.max_arity for v in range(t.nv))]
    values = {}
    for inputs in itertools.product(range(L.dim), repeat=len(label_order)):
        vec = {}
        for t in trees:
            c = _tree_term(forms, t, inputs, label_order)
            if c:
                vec[t] = c
        if vec:
            values[inputs] = vec
    return CohFTMap(L, tuple(label_order), max_degree, values)


def relabel(vec: TreeVector, mapping: dict) -> TreeVector:
    """Rename tails by ``mapping`` and return to canonical orientation."""
    out: TreeVector = {}
    for t, c in vec.items():
        g = Graph(t.vdata, t.edges, tuple((mapping[l], x) for l, x in t.tails))
        canon, s = canonical_form(g)
        if s:
            y = out.get(canon, 0) + s * c
            if y:
                out[canon] = y
            else:
                out.pop(canon)
    return out


def _outside_annihilator(vec: TreeVector, labels, max_degree: int) -> bool:
    for d in range(max_degree + 1):
        part = {t: c for t, c in vec.items() if t.ne == d}
        if part and any(pairing(rel, part) for rel in relations(labels, d)):
            return True
    return False


@dataclass
class AxiomReport:
    arity: int
    max_degree: int
    equivariance_failures: list = field(default_factory=list)  # (inputs, permutation)
    boundary_failures: list = field(default_factory=list)  # (inputs, partition)
    annihilator_failures: list = field(default_factory=list)  # (labels, inputs)

    @property
    def equivariant(self) -> bool:
        return not self.equivariance_failures

    @property
    def boundary_compatible(self) -> bool:
        return not self.boundary_failures and not self.annihilator_failures

    @property
    def passed(self) -> bool:
        return self.equivariant and self.boundary_compatible


def check_axioms(I: CohFTMap, limit: int = 20) -> AxiomReport:
    """S_n-equivariance and boundary compatibility of I up to its tree degree.

    The values of I and of the factor maps must also pair to zero with all
    relations, i.e. lie in H; this is where the Jacobi identities enter.
    At most ``limit`` failures of each kind are recorded.
    """
    L = I.source
    par = L.space.parities
    order = list(I.labels)
    n = len(order)
    p = I.max_degree
    forms = _Forms(L)
    report = AxiomReport(n, p)
    inputs_all = list(itertools.product(range(L.dim), repeat=n))

    for x in inputs_all:
        if len(report.annihilator_failures) < limit and _outside_annihilator(I(x), order, p):
            report.annihilator_failures.append((tuple(order), x))
        for pi in itertools.permutations(range(n)):
            # slot i receives x_{pi(i)}; tails are renamed back accordingly
            xp = tuple(x[pi[i]] for i in range(n))
            mapping = {order[pi[i]]: order[i] for i in range(n)}
            sign = koszul_sign([par[i] for i in x], pi)
            expected = {t: sign * c for t, c in relabel(I(x), mapping).items()}
            if I(xp) != expected and len(report.equivariance_failures) < limit:
                report.equivariance_failures.append((x, pi))

    if p >= 1:
        pos = {l: i for i, l in enumerate(order)}
        for sigma in nontrivial_partitions(order):
            s1, s2 = (sorted(b, key=pos.get) for b in sorted(sigma, key=min))
            I1 = build_I(L, s1 + [PLUS], p - 1, forms)
            I2 = build_I(L, [PLUS] + s2, p - 1, forms)
            for J, labs in ((I1, s1 + [PLUS]), (I2, [PLUS] + s2)):
                for y, vec in J.values.items():
                    if len(report.annihilator_failures) < limit and _outside_annihilator(vec, labs, p - 1):
                        report.annihilator_failures.append((tuple(labs), y))
            perm = [pos[l] for l in s1 + s2]
            for x in inputs_all:
                lhs = {k: c for k, c in boundary_map(I(x), sigma, PLUS).items() if k[0].ne + k[1].ne <= p - 1}
                x1 = tuple(x[pos[l]] for l in s1)
                x2 = tuple(x[pos[l]] for l in s2)
                eps = koszul_sign([par[i] for i in x], perm)
                rhs: dict = {}
                for a, b, d in forms.delta:
                    for t1, c1 in I1(x1 + (a,)).items():
                        for t2, c2 in I2((b,) + x2).items():
                            if t1.ne + t2.ne <= p - 1:
                                key = (t1, t2)
                                rhs[key] = rhs.get(key, 0) + eps * d * c1 * c2
                rhs = {k: c for k, c in rhs.items() if c}
                if lhs != rhs and len(report.boundary_failures) < limit:
                    report.boundary_failures.append((x, sigma))
    return report
