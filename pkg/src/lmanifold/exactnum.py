"""Exact rational scalars and sparse matrices.

Scalars are :class:`fractions.Fraction`; a :class:`SparseMatrix` keeps one
dict per row mapping column index to a nonzero value.  Elimination uses
a Markowitz-style pivot choice (fewest entries in the pivot row times the
pivot column) so that the combinatorial matrices built elsewhere in the
package stay sparse while they are reduced.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Scalar = Fraction


def scalar(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact scalar."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floating point values are not accepted")
    return Fraction(value)


class SparseMatrix:
    """Immutable sparse matrix over the rationals."""

    __slots__ = ("nrows", "ncols", "_rows")

    def __init__(self, nrows: int, ncols: int, rows: Sequence[Mapping[int, object]] | None = None):
        if nrows < 0 or ncols < 0:
            raise ValueError("negative shape")
        self.nrows = nrows
        self.ncols = ncols
        clean: list[dict[int, Fraction]] = []
        rows = rows if rows is not None else [{}] * nrows
        if len(rows) != nrows:
            raise ValueError(f"expected {nrows} rows, got {len(rows)}")
        for r in rows:
            d = {}
            for c, v in r.items():
                if not 0 <= c < ncols:
                    raise IndexError(f"column {c} out of range for {ncols} columns")
                v = scalar(v)
                if v:
                    d[c] = v
            clean.append(d)
        self._rows = tuple(clean)

    @classmethod
    def from_dense(cls, data: Sequence[Sequence[object]], ncols: int | None = None) -> "SparseMatrix":
        if ncols is None:
            ncols = len(data[0]) if data else 0
        return cls(len(data), ncols, [{j: v for j, v in enumerate(row) if v} for row in data])

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, [{i: 1} for i in range(n)])

    @classmethod
    def from_vectors(cls, ncols: int, vectors: Iterable[Mapping[int, object]]) -> "SparseMatrix":
        rows = list(vectors)
        return cls(len(rows), ncols, rows)

    def row(self, i: int) -> dict[int, Fraction]:
        return dict(self._rows[i])

    def rows(self):
        return [dict(r) for r in self._rows]

    def entries(self) -> dict[tuple[int, int], Fraction]:
        return {(i, j): v for i, r in enumerate(self._rows) for j, v in r.items()}

    def nnz(self) -> int:
        return sum(len(r) for r in self._rows)

    def transpose(self) -> "SparseMatrix":
        cols: list[dict[int, Fraction]] = [{} for _ in range(self.ncols)]
        for i, r in enumerate(self._rows):
            for j, v in r.items():
                cols[j][i] = v
        return SparseMatrix(self.ncols, self.nrows, cols)

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for i, r in enumerate(self._rows):
            for j, v in r.items():
                out[i][j] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.nrows, self.ncols, self._rows) == (other.nrows, other.ncols, other._rows)

    def __hash__(self):
        return hash((self.nrows, self.ncols, tuple(tuple(sorted(r.items())) for r in self._rows)))

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def _eliminate(rows: list[dict[int, Fraction]]) -> list[tuple[int, dict[int, Fraction]]]:
    """Reduce ``rows`` to echelon form; return (pivot column, pivot row) pairs.

    Each returned row is normalised so that its pivot entry is 1 and no
    other returned row has a nonzero entry in that pivot column.
    """
    active = [dict(r) for r in rows if r]
    col_count: dict[int, int] = {}
    for r in active:
        for c in r:
            col_count[c] = col_count.get(c, 0) + 1
    pivots: list[tuple[int, dict[int, Fraction]]] = []
    while active:
        best = None
        for idx, r in enumerate(active):
            lr = len(r) - 1
            for c in r:
                cost = lr * (col_count[c] - 1)
                key = (cost, c, idx)
                if best is None or key < best:
                    best = key
                    if cost == 0:
                        break
            if best is not None and best[0] == 0:
                break
        _, pc, pidx = best
        prow = active.pop(pidx)
        for c in prow:
            col_count[c] -= 1
        inv = 1 / prow[pc]
        prow = {c: v * inv for c, v in prow.items()}
        remaining = []
        for r in active:
            f = r.get(pc)
            if f:
                for c in r:
                    col_count[c] -= 1
                for c, v in prow.items():
                    nv = r.get(c, 0) - f * v
                    if nv:
                        r[c] = nv
                    else:
                        r.pop(c, None)
                for c in r:
                    col_count[c] = col_count.get(c, 0) + 1
            if r:
                remaining.append(r)
        active = remaining
        pivots.append((pc, prow))
    # back substitution to reduced form
    for i in range(len(pivots) - 1, -1, -1):
        pc, prow = pivots[i]
        for j in range(i):
            qc, qrow = pivots[j]
            f = qrow.get(pc)
            if f:
                for c, v in prow.items():
                    nv = qrow.get(c, 0) - f * v
                    if nv:
                        qrow[c] = nv
                    else:
                        qrow.pop(c, None)
    return pivots


def rank(m: SparseMatrix) -> int:
    return len(_eliminate(m.rows()))


class RowReducer:
    """Reduced row-echelon basis of a row space, for membership and quotient coordinates."""

    def __init__(self, ncols: int, rows: Iterable[Mapping[int, object]]):
        self.ncols = ncols
        self.pivots = {pc: prow for pc, prow in _eliminate([{c: scalar(v) for c, v in r.items() if v} for r in rows])}
        self.free_columns = [c for c in range(ncols) if c not in self.pivots]

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, vec: Mapping[int, object]) -> dict[int, Fraction]:
        """Remainder of ``vec`` modulo the row space; supported on free columns."""
        v = {c: scalar(x) for c, x in vec.items() if x}
        for pc in [c for c in v if c in self.pivots]:
            f = v.get(pc)
            if not f:
                continue
            for c, x in self.pivots[pc].items():
                nv = v.get(c, 0) - f * x
                if nv:
                    v[c] = nv
                else:
                    v.pop(c, None)
        return v

    def contains(self, vec: Mapping[int, object]) -> bool:
        return not self.reduce(vec)


def quotient_dimension(span: SparseMatrix, relations: SparseMatrix) -> int:
    """dim(rowspace(span)) - dim(rowspace(span) ∩ rowspace(relations))."""
    if span.ncols != relations.ncols:
        raise ValueError(f"column mismatch: {span.ncols} vs {relations.ncols}")
    r_rel = rank(relations)
    r_sum = len(_eliminate(span.rows() + relations.rows()))
    return r_sum - r_rel


def nullspace_basis(m: SparseMatrix) -> list[list[Fraction]]:
    """Exact basis of the right kernel, one vector per free column."""
    red = RowReducer(m.ncols, m.rows())
    basis = []
    for fc in red.free_columns:
        v = [Fraction(0)] * m.ncols
        v[fc] = Fraction(1)
        for pc, prow in red.pivots.items():
            x = prow.get(fc)
            if x:
                v[pc] = -x
        basis.append(v)
    return basis


def matrix_inverse(a: Sequence[Sequence[object]]) -> list[list[Fraction]]:
    """Inverse of a small dense square matrix by Gauss-Jordan elimination."""
    n = len(a)
    aug = [[scalar(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]
