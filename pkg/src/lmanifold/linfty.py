"""Curved cyclic L-infinity structures given by structure constants.

``ops[n]`` maps ``(i_1, .., i_n, k)`` to the coefficient ``B^k_{i_1..i_n}``
of ``l_n(e_{i_1}, .., e_{i_n})``.  Every ordering of the inputs is stored,
so an inconsistent (non-antisymmetric) table can be represented and then
reported by :func:`validate_structure`.  :meth:`LinftyStructure.from_generators`
builds a consistent table from one ordering per input multiset.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .exactnum import scalar
from .superlin import PairingForm, SuperSpace, koszul_sign, SYMMETRIC

Tensor = dict  # (i_1, .., i_n, k) -> Fraction


@dataclass(frozen=True)
class LinftyStructure:
    space: SuperSpace
    pairing: PairingForm
    max_arity: int
    ops: tuple = field(default=())

    def __post_init__(self):
        if self.pairing.kind != SYMMETRIC:
            raise ValueError("the pairing g must be symmetric")
        if self.pairing.space.parities != self.space.parities:
            raise ValueError("pairing lives on a different space")
        ops = list(self.ops) + [{}] * (self.max_arity + 1 - len(self.ops))
        if len(ops) != self.max_arity + 1:
            raise ValueError(f"got {len(self.ops)} operations for max arity {self.max_arity}")
        clean = []
        for n, table in enumerate(ops):
            t = {}
            for key, c in table.items():
                key = tuple(key)
                if len(key) != n + 1 or not all(0 <= i < self.space.dim for i in key):
                    raise ValueError(f"bad index {key} for l_{n}")
                c = scalar(c)
                if c:
                    t[key] = c
            clean.append(t)
        object.__setattr__(self, "ops", tuple(clean))

    @property
    def dim(self) -> int:
        return self.space.dim

    @classmethod
    def from_generators(cls, space: SuperSpace, pairing: PairingForm, max_arity: int, generators: dict) -> "LinftyStructure":
        """Expand ``{n: {(i_1..i_n, k): c}}`` to all input orderings by antisymmetry."""
        par = space.parities
        ops = [dict() for _ in range(max_arity + 1)]
        for n, table in generators.items():
            if n > max_arity:
                raise ValueError(f"arity {n} exceeds max arity {max_arity}")
            for key, c in table.items():
                c = scalar(c)
                if not c:
                    continue
                idx, k = tuple(key[:-1]), key[-1]
                pars = [par[i] for i in idx]
                images: dict[tuple, int] = {}
                for perm in itertools.permutations(range(n)):
                    img = tuple(idx[p] for p in perm)
                    s = koszul_sign(pars, perm, antisymmetric=True)
                    if images.setdefault(img, s) != s:
                        raise ValueError(f"l_{n}{idx} is forced to vanish by antisymmetry")
                for img, s in images.items():
                    ops[n][img + (k,)] = ops[n].get(img + (k,), 0) + s * c
        return cls(space, pairing, max_arity, tuple(ops))

    def op(self, n: int) -> Tensor:
        return self.ops[n] if 0 <= n <= self.max_arity else {}

    def apply(self, n: int, idx) -> dict[int, Fraction]:
        """l_n(e_{idx}) as ``{k: coeff}``."""
        idx = tuple(idx)
        table = self.op(n)
        out = {}
        for k in range(self.dim):
            c = table.get(idx + (k,))
            if c:
                out[k] = c
        return out

    def output_index(self) -> list[dict]:
        """Per arity, ``inputs -> {k: coeff}`` for fast composition."""
        out = []
        for table in self.ops:
            by_in: dict = {}
            for key, c in table.items():
                by_in.setdefault(key[:-1], {})[key[-1]] = c
            out.append(by_in)
        return out


def validate_structure(L: LinftyStructure) -> list[str]:
    """Every violated parity, antisymmetry or cyclicity constraint; empty when valid."""
    par = L.space.parities
    problems = list(L.pairing.violations())
    for n, table in enumerate(L.ops):
        for key, c in sorted(table.items()):
            idx, k = key[:-1], key[-1]
            if par[k] != (n + sum(par[i] for i in idx)) % 2:
                problems.append(f"l_{n} entry {idx}->{k} breaks the parity rule")
            pars = [par[i] for i in idx]
            for a in range(n - 1):
                perm = list(range(n))
                perm[a], perm[a + 1] = a + 1, a
                img = tuple(idx[p] for p in perm) + (k,)
                s = koszul_sign(pars, perm, antisymmetric=True)
                if table.get(img, 0) != s * c:
                    problems.append(f"l_{n} entry {idx}->{k} is not antisymmetric under swapping slots {a},{a + 1}")
    if not problems:
        problems.extend(cyclicity_violations(L))
    return problems


def cyclic_form(L: LinftyStructure, n: int) -> Tensor:
    """Y_{n+1}(e_{i_1}, .., e_{i_n}, e_j) = g(l_n(e_i..), e_j)."""
    g = L.pairing.matrix
    out: Tensor = {}
    for key, c in L.op(n).items():
        idx, k = key[:-1], key[-1]
        for j in range(L.dim):
            if g[k][j]:
                y = out.get(idx + (j,), 0) + c * g[k][j]
                if y:
                    out[idx + (j,)] = y
                else:
                    out.pop(idx + (j,))
    return out


def cyclic_sign(parities, idx) -> int:
    n = len(idx) - 1
    rest = sum(parities[i] for i in idx[1:])
    return -1 if (n + parities[idx[0]] * rest) % 2 else 1


def cyclicity_violations(L: LinftyStructure) -> list[str]:
    par = L.space.parities
    out = []
    for n in range(L.max_arity + 1):
        Y = cyclic_form(L, n)
        keys = set(Y) | {k[1:] + k[:1] for k in Y}
        for key in sorted(keys):
            rotated = key[1:] + key[:1]
            if Y.get(key, 0) != cyclic_sign(par, key) * Y.get(rotated, 0):
                out.append(f"Y_{n + 1}{key} is not cyclically invariant")
    return out


@dataclass(frozen=True)
class CyclicForm:
    arity: int
    tensor: Tensor


def cyclic_forms(L: LinftyStructure) -> list[CyclicForm]:
    """Y_1 .. Y_{N+1}; raises ValueError when one of them is not cyclic."""
    bad = cyclicity_violations(L)
    if bad:
        raise ValueError("; ".join(bad[:5]))
    return [CyclicForm(n + 1, cyclic_form(L, n)) for n in range(L.max_arity + 1)]


def jacobi_sign(parities, s1, s2) -> int:
    """(-1)^{|S1||S2|} times the antisymmetric Koszul sign of the shuffle S1, S2."""
    eps = koszul_sign(parities, list(s1) + list(s2), antisymmetric=True)
    return -eps if (len(s1) * len(s2)) % 2 else eps


def _accumulate(out: dict, key, c) -> None:
    y = out.get(key, 0) + c
    if y:
        out[key] = y
    else:
        out.pop(key, None)


def jacobi_residual(L: LinftyStructure, n: int, inputs=None) -> Tensor:
    """The Jacobi expression of arity n as a tensor ``(i_1..i_n, k) -> coeff``.

    ``inputs`` restricts evaluation to the given index tuples (all by default).
    """
    if not 0 <= n <= L.max_arity - 1:
        raise ValueError(f"Jacobi relation {n} needs operations up to arity {n + 1}; max arity is {L.max_arity}")
    par = L.space.parities
    table = L.output_index()
    out: Tensor = {}
    if inputs is None:
        inputs = itertools.product(range(L.dim), repeat=n)
    splits = []
    for r in range(n + 1):
        for s1 in itertools.combinations(range(n), r):
            s2 = tuple(i for i in range(n) if i not in s1)
            splits.append((s1, s2))
    for idx in inputs:
        pars = [par[i] for i in idx]
        for s1, s2 in splits:
            inner = table[len(s1)].get(tuple(idx[i] for i in s1))
            if not inner:
                continue
            sign = jacobi_sign(pars, s1, s2)
            tail = tuple(idx[i] for i in s2)
            outer_table = table[len(s2) + 1]
            for m, a in inner.items():
                for k, b in outer_table.get((m,) + tail, {}).items():
                    _accumulate(out, tuple(idx) + (k,), sign * a * b)
    return out


def _vec_apply(L: LinftyStructure, n: int, vecs: list[dict]) -> dict:
    out: dict = {}
    for combo in itertools.product(*(v.items() for v in vecs)):
        coeff = Fraction(1)
        for _, c in combo:
            coeff *= c
        for k, b in L.apply(n, [i for i, _ in combo]).items():
            _accumulate(out, k, coeff * b)
    return out


def _vadd(*terms) -> dict:
    out: dict = {}
    for s, v in terms:
        for k, c in v.items():
            _accumulate(out, k, s * c)
    return out


def small_identity(L: LinftyStructure, n: int, idx) -> dict:
    """The written-out identities for n <= 3 on basis inputs."""
    par = L.space.parities
    c = L.apply(0, ())
    e = [{i: Fraction(1)} for i in idx]

    def d(v):
        return _vec_apply(L, 1, [v])

    def br(u, v):
        return _vec_apply(L, 2, [u, v])

    def l3(a, b, cc):
        return _vec_apply(L, 3, [a, b, cc])

    if n == 0:
        return d(c)
    if n == 1:
        return _vadd((1, d(d(e[0]))), (1, br(c, e[0])))
    if n == 2:
        x, y = e
        sx = (-1) ** par[idx[0]]
        return _vadd((1, d(br(x, y))), (-1, br(d(x), y)), (-sx, br(x, d(y))), (1, l3(c, x, y)))
    if n == 3:
        x, y, z = e
        px, py, pz = (par[i] for i in idx)
        return _vadd(
            (1, d(l3(x, y, z))),
            (1, br(br(x, y), z)),
            (-((-1) ** (py * pz)), br(br(x, z), y)),
            ((-1) ** (px * (py + pz)), br(br(y, z), x)),
            (1, l3(d(x), y, z)),
            ((-1) ** px, l3(x, d(y), z)),
            ((-1) ** (px + py), l3(x, y, d(z))),
            (1, _vec_apply(L, 4, [c, x, y, z])),
        )
    raise ValueError("hand-expanded identities exist for n <= 3 only")


@dataclass
class JacobiReport:
    max_arity: int
    certified_up_to: int
    nonzero: dict  # n -> number of nonzero residual entries
    crosscheck_mismatches: list

    @property
    def failing(self) -> list[int]:
        return [n for n, k in sorted(self.nonzero.items()) if k]

    @property
    def passed(self) -> bool:
        return not self.failing and not self.crosscheck_mismatches


def _residual_count(args) -> tuple[int, int]:
    L, n = args
    return n, len(jacobi_residual(L, n))


def check_all_jacobi(L: LinftyStructure, jobs: int = 1, up_to: int | None = None) -> JacobiReport:
    """Jacobi relations 0..N-1 (or 0..up_to) plus the independent cross-check for n <= 3."""
    top = L.max_arity - 1 if up_to is None else min(up_to, L.max_arity - 1)
    arities = list(range(top + 1))
    if jobs > 1 and len(arities) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = dict(pool.map(_residual_count, [(L, n) for n in arities]))
    else:
        counts = dict(_residual_count((L, n)) for n in arities)
    mismatches = []
    for n in arities:
        if n > 3:
            break
        res = jacobi_residual(L, n)
        for idx in itertools.product(range(L.dim), repeat=n):
            direct = {k[-1]: c for k, c in res.items() if k[:-1] == idx}
            if direct != small_identity(L, n, idx):
                mismatches.append((n, idx))
    return JacobiReport(L.max_arity, top, counts, mismatches)


def gl_structure(m: int, n: int) -> LinftyStructure:
    """gl(m|n) with the super commutator as l_2 and the supertrace form."""
    vpar = [0] * m + [1] * n
    size = m + n
    basis = [(i, j) for i in range(size) for j in range(size)]
    labels = tuple(f"e{i}{j}" for i, j in basis)
    space = SuperSpace(labels, tuple((vpar[i] + vpar[j]) % 2 for i, j in basis))
    pos = {b: a for a, b in enumerate(basis)}
    g = [[0] * len(basis) for _ in basis]
    for (i, j), a in pos.items():
        g[a][pos[(j, i)]] = (-1) ** vpar[i]
    pairing = PairingForm(space, g, SYMMETRIC)
    table = {}
    par = space.parities
    for (i, j), a in pos.items():
        for (k, l), b in pos.items():
            # e_ij e_kl = delta_jk e_il
            if j == k:
                _accumulate(table, (a, b, pos[(i, l)]), 1)
            if l == i:
                _accumulate(table, (a, b, pos[(k, j)]), -((-1) ** (par[a] * par[b])))
    return LinftyStructure(space, pairing, 4, ({}, {}, table))
