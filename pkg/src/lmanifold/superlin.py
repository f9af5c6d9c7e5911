"""Z/2-graded linear algebra with explicit bases.

Every Koszul sign in the package is computed here.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactnum import matrix_inverse, scalar

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True)
class SuperSpace:
    labels: tuple[str, ...]
    parities: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "parities", tuple(int(p) % 2 for p in self.parities))
        if len(self.labels) != len(self.parities):
            raise ValueError("one parity per basis label is required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("basis labels must be distinct")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def sdim(self) -> tuple[int, int]:
        odd = sum(self.parities)
        return (self.dim - odd, odd)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def parity_shift(space: SuperSpace) -> SuperSpace:
    return SuperSpace(space.labels, tuple(1 - p for p in space.parities))


def koszul_sign(parities: Sequence[int], permutation: Sequence[int], antisymmetric: bool = False) -> int:
    """Sign of reordering ``x_0..x_{n-1}`` into ``x_{perm[0]}, .., x_{perm[n-1]}``.

    Each inverted pair contributes ``(-1)^{p_i p_j}``, and an extra ``-1``
    when ``antisymmetric`` is set.
    """
    n = len(permutation)
    if len(parities) != n:
        raise ValueError("parities and permutation differ in length")
    if sorted(permutation) != list(range(n)):
        raise ValueError(f"not a permutation: {list(permutation)}")
    exponent = 0
    for a in range(n):
        pa = permutation[a]
        for b in range(a + 1, n):
            pb = permutation[b]
            if pa > pb:
                exponent += parities[pa] * parities[pb] + (1 if antisymmetric else 0)
    return -1 if exponent % 2 else 1


def permutation_sign(permutation: Sequence[int]) -> int:
    return koszul_sign([0] * len(permutation), permutation, antisymmetric=True)


def shuffle_sign(parities: Sequence[int], s1: Sequence[int], s2: Sequence[int], antisymmetric: bool = False) -> int:
    """Koszul sign of the shuffle listing ``s1`` ascending, then ``s2`` ascending (0-based)."""
    n = len(parities)
    a, b = sorted(s1), sorted(s2)
    if sorted(a + b) != list(range(n)):
        raise ValueError("s1 and s2 must partition the index range")
    return koszul_sign(parities, a + b, antisymmetric)


@dataclass(frozen=True)
class PairingForm:
    """Even bilinear form on a super space, symmetric (g) or antisymmetric (omega)."""

    space: SuperSpace
    matrix: tuple[tuple[Fraction, ...], ...]
    kind: str = SYMMETRIC

    def __post_init__(self):
        mat = tuple(tuple(scalar(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", mat)
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        n = self.space.dim
        par = self.space.parities
        mat = self.matrix
        out = []
        if self.kind not in (SYMMETRIC, ANTISYMMETRIC):
            return [f"unknown pairing kind {self.kind!r}"]
        if len(mat) != n or any(len(r) != n for r in mat):
            return [f"pairing matrix must be {n}x{n}"]
        for i in range(n):
            for j in range(n):
                if mat[i][j] and par[i] != par[j]:
                    out.append(f"entry ({i},{j}) pairs opposite parities")
                sgn = (-1) ** (par[i] * par[j])
                expected = sgn * mat[j][i] if self.kind == SYMMETRIC else -sgn * mat[j][i]
                if mat[i][j] != expected:
                    out.append(f"entry ({i},{j}) violates the {self.kind} law")
        if not out:
            try:
                matrix_inverse(mat)
            except ValueError:
                out.append("pairing is degenerate")
        return out

    def __call__(self, i: int, j: int) -> Fraction:
        return self.matrix[i][j]

    def inverse(self) -> list[list[Fraction]]:
        return matrix_inverse(self.matrix)


@dataclass(frozen=True)
class Casimir:
    form: PairingForm
    tensor: tuple[tuple[Fraction, ...], ...]

    def entries(self):
        """Nonzero ``(a, b, coeff)`` with Delta = sum coeff e_a (x) e_b."""
        return [(a, b, c) for a, row in enumerate(self.tensor) for b, c in enumerate(row) if c]


def casimir_of(form: PairingForm) -> Casimir:
    inv = form.inverse()
    return Casimir(form, tuple(tuple(r) for r in inv))


def contract_left(cas: Casimir) -> list[list[Fraction]]:
    """sum_k Delta^{ik} g_{kj}; the identity for a valid Casimir."""
    n = cas.form.space.dim
    g = cas.form.matrix
    d = cas.tensor
    return [[sum((d[i][k] * g[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]


def contract_right(cas: Casimir) -> list[list[Fraction]]:
    n = cas.form.space.dim
    g = cas.form.matrix
    d = cas.tensor
    return [[sum((g[i][k] * d[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]
