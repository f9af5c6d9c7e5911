"""Formal L-manifolds in flat coordinates.

Functions are truncated power series in even and odd coordinates.  A
monomial is an exponent tuple over all coordinates (odd exponents are 0
or 1) and stands for the ordered product x_0^a_0 x_1^a_1 ... in coordinate
order.  Truncation is by total degree in the even coordinates.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactnum import matrix_inverse, scalar
from .linfty import LinftyStructure, gl_structure, validate_structure
from .superlin import ANTISYMMETRIC, SYMMETRIC, PairingForm, SuperSpace

Monomial = tuple  # exponent per coordinate


def _odd_swap_sign(parities, a: Monomial, b: Monomial) -> int:
    # x^a x^b -> x^(a+b): every odd variable of b jumps over later odd variables of a
    swaps = 0
    later_a = 0
    for i in range(len(parities) - 1, -1, -1):
        if not parities[i]:
            continue
        if b[i]:
            swaps += later_a
        if a[i]:
            later_a += 1
    return -1 if swaps % 2 else 1


@dataclass(frozen=True)
class TruncatedSuperSeries:
    space: SuperSpace
    truncation: int
    coeffs: tuple  # sorted ((monomial, Fraction), ...)

    @classmethod
    def from_terms(cls, space: SuperSpace, truncation: int, terms) -> "TruncatedSuperSeries":
        par = space.parities
        acc: dict = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for mono, c in items:
            mono = tuple(int(e) for e in mono)
            if len(mono) != space.dim or any(e < 0 for e in mono):
                raise ValueError(f"bad monomial {mono}")
            if any(p and e > 1 for p, e in zip(par, mono)):
                continue  # odd squares vanish
            if sum(e for p, e in zip(par, mono) if not p) > truncation:
                continue
            c = scalar(c)
            acc[mono] = acc.get(mono, 0) + c
        return cls(space, truncation, tuple(sorted((m, Fraction(c)) for m, c in acc.items() if c)))

    @classmethod
    def zero(cls, space: SuperSpace, truncation: int) -> "TruncatedSuperSeries":
        return cls(space, truncation, ())

    @classmethod
    def constant(cls, space: SuperSpace, truncation: int, c) -> "TruncatedSuperSeries":
        return cls.from_terms(space, truncation, {(0,) * space.dim: c})

    @classmethod
    def variable(cls, space: SuperSpace, truncation: int, var) -> "TruncatedSuperSeries":
        i = _var_index(space, var)
        mono = tuple(int(j == i) for j in range(space.dim))
        return cls.from_terms(space, truncation, {mono: 1})

    def terms(self) -> dict:
        return dict(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def parity(self):
        """0 or 1 for homogeneous series, None for mixed; 0 for the zero series."""
        par = self.space.parities
        ps = {sum(e for p, e in zip(par, m) if p) % 2 for m, _ in self.coeffs}
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def constant_term(self) -> Fraction:
        return self.terms().get((0,) * self.space.dim, Fraction(0))

    def even_degree(self, mono: Monomial) -> int:
        return sum(e for p, e in zip(self.space.parities, mono) if not p)

    def truncate(self, degree: int) -> "TruncatedSuperSeries":
        return TruncatedSuperSeries.from_terms(self.space, degree, self.coeffs)

    def _check(self, other: "TruncatedSuperSeries") -> None:
        if self.space != other.space:
            raise ValueError("series are over different variables")

    def __add__(self, other):
        return series_arith(self, other, "add")

    def __sub__(self, other):
        return series_arith(self, other.scale(-1), "add")

    def __mul__(self, other):
        if isinstance(other, TruncatedSuperSeries):
            return series_arith(self, other, "mul")
        return self.scale(other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "TruncatedSuperSeries":
        c = scalar(c)
        return TruncatedSuperSeries(self.space, self.truncation, tuple((m, x * c) for m, x in self.coeffs if x * c))

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for mono, c in self.coeffs:
            vars_ = "*".join(
                (lab if e == 1 else f"{lab}^{e}") for lab, e in zip(self.space.labels, mono) if e
            )
            parts.append(f"{c}*{vars_}" if vars_ else f"{c}")
        return " + ".join(parts)


def _var_index(space: SuperSpace, var) -> int:
    if isinstance(var, int):
        if not 0 <= var < space.dim:
            raise ValueError(f"unknown variable index {var}")
        return var
    if var not in space.labels:
        raise ValueError(f"unknown variable {var!r}")
    return space.index(var)


def series_arith(a: TruncatedSuperSeries, b: TruncatedSuperSeries, op: str) -> TruncatedSuperSeries:
    """Sum or product, truncated at the smaller truncation degree."""
    a._check(b)
    D = min(a.truncation, b.truncation)
    par = a.space.parities
    acc: dict = {}
    if op == "add":
        for m, c in a.coeffs + b.coeffs:
            acc[m] = acc.get(m, 0) + c
    elif op == "mul":
        for ma, ca in a.coeffs:
            da = a.even_degree(ma)
            if da > D:
                continue
            for mb, cb in b.coeffs:
                if da + b.even_degree(mb) > D:
                    continue
                if any(p and x and y for p, x, y in zip(par, ma, mb)):
                    continue
                m = tuple(x + y for x, y in zip(ma, mb))
                acc[m] = acc.get(m, 0) + _odd_swap_sign(par, ma, mb) * ca * cb
    else:
        raise ValueError(f"unknown operation {op!r}")
    return TruncatedSuperSeries.from_terms(a.space, D, acc)


def partial_derivative(f: TruncatedSuperSeries, var) -> TruncatedSuperSeries:
    """Left derivative: an odd variable is moved to the front before removal."""
    i = _var_index(f.space, var)
    par = f.space.parities
    acc: dict = {}
    for m, c in f.coeffs:
        if not m[i]:
            continue
        if par[i]:
            before = sum(m[j] for j in range(i) if par[j])
            coeff = -c if before % 2 else c
        else:
            coeff = c * m[i]
        new = m[:i] + (m[i] - 1,) + m[i + 1:]
        acc[new] = acc.get(new, 0) + coeff
    # the degree of exactness drops with an even derivative
    D = f.truncation - (0 if par[i] else 1)
    return TruncatedSuperSeries.from_terms(f.space, D, acc)


def iterated_derivative(f: TruncatedSuperSeries, seq: Sequence[int]) -> TruncatedSuperSeries:
    """f_{i_1..i_k} = d_{i_1}( .. d_{i_k} f)."""
    for i in reversed(seq):
        f = partial_derivative(f, i)
    return f


@dataclass(frozen=True)
class FormalLManifold:
    """Flat coordinates, a constant even symplectic form and an odd potential."""

    coordinates: SuperSpace
    omega: PairingForm
    potential: TruncatedSuperSeries

    def __post_init__(self):
        if self.omega.kind != ANTISYMMETRIC:
            raise ValueError("omega must be an antisymmetric form")
        if self.omega.space.parities != self.coordinates.parities:
            raise ValueError("omega lives on different coordinates")
        if self.potential.space != self.coordinates:
            raise ValueError("potential is over different variables")
        if self.potential.parity() != 1 and self.potential:
            raise ValueError("the potential must be an odd function")
        if self.potential.constant_term():
            raise ValueError("the potential must have zero constant term")

    @property
    def truncation(self) -> int:
        return self.potential.truncation

    @property
    def dim(self) -> int:
        return self.coordinates.dim

    def omega_inverse(self) -> list[list[Fraction]]:
        return matrix_inverse(self.omega.matrix)

    def series(self, terms) -> TruncatedSuperSeries:
        return TruncatedSuperSeries.from_terms(self.coordinates, self.truncation, terms)


@dataclass(frozen=True)
class VectorFieldPoly:
    """sum_i components[i] d_i."""

    components: tuple

    def apply(self, f: TruncatedSuperSeries) -> TruncatedSuperSeries:
        out = TruncatedSuperSeries.zero(f.space, f.truncation)
        for i, c in enumerate(self.components):
            if c:
                out = out + c * partial_derivative(f, i)
        return out


def homogeneous_parts(f: TruncatedSuperSeries) -> dict[int, TruncatedSuperSeries]:
    par = f.space.parities
    parts: dict = {0: [], 1: []}
    for m, c in f.coeffs:
        parts[sum(e for p, e in zip(par, m) if p) % 2].append((m, c))
    return {k: TruncatedSuperSeries(f.space, f.truncation, tuple(v)) for k, v in parts.items()}


def poisson_bracket(M: FormalLManifold, f: TruncatedSuperSeries, g: TruncatedSuperSeries) -> TruncatedSuperSeries:
    """{f, g} = sum_ij (f <-d_i) w^{ji} (d_j g), a right derivative on f.

    For odd f the right and left derivatives agree, so {Phi, f} = Q f.
    """
    if f.space != M.coordinates or g.space != M.coordinates:
        raise ValueError("series are over different variables")
    par = M.coordinates.parities
    winv = M.omega_inverse()
    D = min(f.truncation, g.truncation) - 1
    out = TruncatedSuperSeries.zero(M.coordinates, D)
    dg = [partial_derivative(g, j) for j in range(M.dim)]
    for fp, part in homogeneous_parts(f).items():
        if not part:
            continue
        for i in range(M.dim):
            di = partial_derivative(part, i)
            if not di:
                continue
            sign = -1 if (par[i] * (fp + 1)) % 2 else 1
            for j in range(M.dim):
                w = winv[j][i]
                if w and dg[j]:
                    out = out + (di * dg[j]).scale(sign * w)
    return out.truncate(D)


def hamiltonian_field(M: FormalLManifold) -> VectorFieldPoly:
    """Q = sum_ij w^{ji} Phi_i d_j."""
    winv = M.omega_inverse()
    dphi = [partial_derivative(M.potential, i) for i in range(M.dim)]
    comps = []
    for j in range(M.dim):
        q = TruncatedSuperSeries.zero(M.coordinates, M.truncation - 1)
        for i in range(M.dim):
            if winv[j][i] and dphi[i]:
                q = q + dphi[i].scale(winv[j][i])
        comps.append(q)
    return VectorFieldPoly(tuple(comps))


@dataclass
class LieResidual:
    residuals: list  # one series per coordinate k
    bracket: TruncatedSuperSeries  # omega(Q, Q) = {Phi, Phi}
    certified_degree: int

    @property
    def vanishes(self) -> bool:
        return not any(self.residuals)

    @property
    def constant(self):
        """The constant value of omega(Q, Q) when the residuals vanish, else None."""
        return self.bracket.constant_term() if self.vanishes else None


def _residual_component(args):
    M, k, winv, dphi = args
    dk = [partial_derivative(d, k) for d in dphi]
    D = M.truncation - 2
    out = TruncatedSuperSeries.zero(M.coordinates, D)
    for i in range(M.dim):
        for j in range(M.dim):
            w = winv[j][i]
            if w and dk[i] and dphi[j]:
                out = out + (dk[i] * dphi[j]).scale(w)
    return out.truncate(D)


def lie_condition_residual(M: FormalLManifold, jobs: int = 1) -> LieResidual:
    """R_k = sum_ij w^{ji} Phi_{ki} Phi_j for every k, exact up to even degree D-2."""
    winv = M.omega_inverse()
    dphi = [partial_derivative(M.potential, i) for i in range(M.dim)]
    args = [(M, k, winv, dphi) for k in range(M.dim)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            res = list(pool.map(_residual_component, args))
    else:
        res = [_residual_component(a) for a in args]
    bracket = poisson_bracket(M, M.potential, M.potential)
    return LieResidual(res, bracket, M.truncation - 2)


def lam_sign(pi_parities: Sequence[int], seq: Sequence[int]) -> int:
    """(-1)^{sum_a (a - 1) p(e_{seq[a]})} with a counted from 1."""
    return -1 if sum(a * pi_parities[i] for a, i in enumerate(seq)) % 2 else 1


def shifted_space(coords: SuperSpace) -> SuperSpace:
    return SuperSpace(coords.labels, tuple(1 - p for p in coords.parities))


def omega_to_g(omega: PairingForm) -> PairingForm:
    """(e_j, e_i) = (-1)^{x_i + 1} w_{ji} on the parity-shifted space."""
    par = omega.space.parities
    n = omega.space.dim
    g = [[(-1) ** (par[i] + 1) * omega.matrix[j][i] for i in range(n)] for j in range(n)]
    return PairingForm(shifted_space(omega.space), g, SYMMETRIC)


def g_to_omega(g: PairingForm) -> PairingForm:
    par = tuple(1 - p for p in g.space.parities)
    n = g.space.dim
    w = [[(-1) ** (par[i] + 1) * g.matrix[j][i] for i in range(n)] for j in range(n)]
    return PairingForm(shifted_space(g.space), w, ANTISYMMETRIC)


def _sequence_derivative_at_zero(mono: Monomial, seq: Sequence[int], space: SuperSpace) -> Fraction:
    f = TruncatedSuperSeries.from_terms(space, sum(mono), {mono: 1})
    return iterated_derivative(f, seq).constant_term()


def _orderings(mono: Monomial) -> set:
    flat = [i for i, e in enumerate(mono) for _ in range(e)]
    return set(itertools.permutations(flat))


def potential_to_operations(M: FormalLManifold, max_arity: int) -> LinftyStructure:
    """The curved cyclic L-infinity structure on the shifted space with g = w^Pi."""
    if M.truncation < max_arity + 1:
        raise ValueError(f"truncation {M.truncation} is too small for arity {max_arity}")
    g = omega_to_g(M.omega)
    pi_par = g.space.parities
    ginv = matrix_inverse(g.matrix)
    ops = [dict() for _ in range(max_arity + 1)]
    for mono, c in M.potential.coeffs:
        order = sum(mono)
        n = order - 1
        if n > max_arity:
            continue
        for seq in _orderings(mono):
            val = c * _sequence_derivative_at_zero(mono, seq, M.coordinates)
            if not val:
                continue
            y = lam_sign(pi_par, seq) * val
            idx, j = seq[:-1], seq[-1]
            for k in range(M.dim):
                if ginv[j][k]:
                    key = idx + (k,)
                    x = ops[n].get(key, 0) + y * ginv[j][k]
                    if x:
                        ops[n][key] = x
                    else:
                        ops[n].pop(key)
    return LinftyStructure(g.space, g, max_arity, tuple(ops))


def operations_to_potential(L: LinftyStructure, truncation: int) -> FormalLManifold:
    """Phi = sum_n Y_n / n! in flat coordinates on the unshifted space."""
    if truncation < L.max_arity + 1:
        raise ValueError(f"truncation {truncation} is too small for arity {L.max_arity}")
    omega = g_to_omega(L.pairing)
    coords = omega.space
    pi_par = L.space.parities
    g = L.pairing.matrix
    terms: dict = {}
    for n in range(L.max_arity + 1):
        Y: dict = {}
        for key, c in L.op(n).items():
            idx, k = key[:-1], key[-1]
            for j in range(L.dim):
                if g[k][j]:
                    Y[idx + (j,)] = Y.get(idx + (j,), 0) + c * g[k][j]
        seen = set()
        for seq, y in Y.items():
            if not y:
                continue
            mono = tuple(seq.count(i) for i in range(L.dim))
            if mono in seen or any(coords.parities[i] and e > 1 for i, e in enumerate(mono)):
                continue
            seen.add(mono)
            base = tuple(sorted(seq))
            yb = Y.get(base, 0)
            d = _sequence_derivative_at_zero(mono, base, coords)
            if yb and d:
                terms[mono] = lam_sign(pi_par, base) * yb / d
    phi = TruncatedSuperSeries.from_terms(coords, truncation, terms)
    return FormalLManifold(coords, omega, phi)


@dataclass
class EulerReport:
    is_conformal: bool
    D: Fraction | None
    d_Q: Fraction | None
    eigen_ok: bool
    isotropy_product: Fraction | None  # (D - 2 d_Q) w(Q, Q) when w(Q, Q) is constant
    certified_degree: int

    @property
    def is_euler(self) -> bool:
        return self.is_conformal and self.d_Q is not None


def _common_ratio(num: TruncatedSuperSeries, den: TruncatedSuperSeries):
    """The scalar r with num = r * den, or None."""
    nt, dt = num.terms(), den.terms()
    if not dt:
        return Fraction(0) if not nt else None
    m, c = next(iter(dt.items()))
    r = nt.get(m, Fraction(0)) / c
    return r if not (num - den.scale(r)) else None


def euler_check(M: FormalLManifold, E: VectorFieldPoly) -> EulerReport:
    """Decide whether E is an Euler field and find D and d_Q up to truncation."""
    par = M.coordinates.parities
    n = M.dim
    if len(E.components) != n:
        raise ValueError(f"expected {n} components, got {len(E.components)}")
    for i, c in enumerate(E.components):
        if c.space != M.coordinates:
            raise ValueError("vector field is over different variables")
        if c and c.parity() != par[i]:
            raise ValueError(f"E is not even: component {i} has the wrong parity")
    T = M.truncation - 2
    affine = all(sum(m) <= 1 for c in E.components for m, _ in c.coeffs)
    if not affine:
        return EulerReport(False, None, None, False, None, T)
    A = [[Fraction(0)] * n for _ in range(n)]
    for i, c in enumerate(E.components):
        for m, x in c.coeffs:
            if sum(m) == 1:
                A[i][m.index(1)] = x
    w = M.omega.matrix
    lie = [[sum((A[i][a] * w[i][b] + A[i][b] * w[a][i] for i in range(n)), Fraction(0)) for b in range(n)] for a in range(n)]
    D = None
    for a in range(n):
        for b in range(n):
            if w[a][b]:
                D = lie[a][b] / w[a][b]
                break
        if D is not None:
            break
    conformal = D is not None and all(lie[a][b] == D * w[a][b] for a in range(n) for b in range(n))
    Q = hamiltonian_field(M)
    bracket = []
    for j in range(n):
        qe = TruncatedSuperSeries.zero(M.coordinates, T)
        for i in range(n):
            if Q.components[i] and A[j][i]:
                qe = qe + Q.components[i].scale(A[j][i])
            if E.components[i]:
                qe = qe - E.components[i] * partial_derivative(Q.components[j], i)
        bracket.append(qe.truncate(T))
    d_Q = None
    consistent = True
    found = set()
    for j in range(n):
        q = Q.components[j].truncate(T)
        if q:
            r = _common_ratio(bracket[j], q)
            if r is None:
                consistent = False
            else:
                found.add(r)
        elif bracket[j]:
            consistent = False
    if consistent and len(found) <= 1:
        d_Q = found.pop() if found else Fraction(0)
    eigen_ok = False
    iso = None
    if conformal and d_Q is not None:
        ephi = E.apply(M.potential)
        top = M.truncation - 1
        diff = (ephi - M.potential.scale(D - d_Q)).truncate(top)
        eigen_ok = all(sum(m) == 0 for m, _ in diff.coeffs)
        res = lie_condition_residual(M)
        if res.vanishes:
            iso = (D - 2 * d_Q) * res.constant
    return EulerReport(conformal, D if conformal else None, d_Q, eigen_ok, iso, T)


def euler_field(M: FormalLManifold, weights: Sequence | None = None) -> VectorFieldPoly:
    """E = sum_i w_i x_i d_i (all weights 1 by default)."""
    weights = weights or [1] * M.dim
    comps = []
    for i in range(M.dim):
        comps.append(TruncatedSuperSeries.variable(M.coordinates, M.truncation, i).scale(weights[i]))
    return VectorFieldPoly(tuple(comps))


def standard_coordinates(n_even: int, n_odd: int) -> SuperSpace:
    labels = tuple(f"x{i + 1}" for i in range(n_even)) + tuple(f"xi{i + 1}" for i in range(n_odd))
    return SuperSpace(labels, (0,) * n_even + (1,) * n_odd)


def standard_omega(n_even: int, n_odd: int, odd_form: str = "identity") -> PairingForm:
    """Darboux pairs on the even block; identity or hyperbolic pairs on the odd block."""
    if n_even % 2:
        raise ValueError("the even block of a symplectic form has even dimension")
    n = n_even + n_odd
    w = [[0] * n for _ in range(n)]
    for k in range(0, n_even, 2):
        w[k][k + 1], w[k + 1][k] = 1, -1
    if odd_form == "identity":
        for k in range(n_even, n):
            w[k][k] = 1
    elif odd_form == "hyperbolic":
        if n_odd % 2:
            raise ValueError("hyperbolic odd form needs an even number of odd coordinates")
        for k in range(n_even, n, 2):
            w[k][k + 1] = w[k + 1][k] = 1
    else:
        raise ValueError(f"unknown odd form {odd_form!r}")
    return PairingForm(standard_coordinates(n_even, n_odd), w, ANTISYMMETRIC)


def _even_function(coords: SuperSpace, n_even: int, D: int, phi) -> TruncatedSuperSeries:
    terms = {}
    for exps, c in dict(phi).items():
        exps = tuple(exps) if not isinstance(exps, int) else (exps,)
        if len(exps) != n_even:
            raise ValueError(f"phi exponent {exps} should have {n_even} entries")
        terms[exps + (0,) * (coords.dim - n_even)] = c
    return TruncatedSuperSeries.from_terms(coords, D, terms)


def series_inverse(f: TruncatedSuperSeries) -> TruncatedSuperSeries:
    """1/f by a geometric series; needs an invertible constant term."""
    a0 = f.constant_term()
    if not a0:
        raise ValueError("series has no invertible constant term")
    one = TruncatedSuperSeries.constant(f.space, f.truncation, 1)
    u = f.scale(1 / a0) - one
    out, power = one, one
    for _ in range(f.truncation + f.space.dim):
        power = power * u.scale(-1)
        if not power:
            break
        out = out + power
    return out.scale(1 / a0)


def example_generator(family: str, **params) -> FormalLManifold:
    """Named example families.

    flat_q(a, n_even=0); lie_superalgebra(structure); gl(m, n);
    dim_n1(phi, n_even=0); dim_n2(phi, C, n_even=0).  ``phi`` maps even
    exponent tuples to coefficients; ``truncation`` defaults to 4.
    """
    D = params.get("truncation", 4)
    if family == "flat_q":
        a = list(params["a"])
        n_even = params.get("n_even", 0)
        omega = standard_omega(n_even, len(a))
        coords = omega.space
        terms = {tuple(int(j == n_even + i) for j in range(coords.dim)): c for i, c in enumerate(a)}
        return FormalLManifold(coords, omega, TruncatedSuperSeries.from_terms(coords, D, terms))
    if family in ("lie_superalgebra", "gl"):
        L = gl_structure(params["m"], params["n"]) if family == "gl" else params["structure"]
        problems = validate_structure(L)
        if problems:
            raise ValueError("not a cyclic Lie superalgebra: " + "; ".join(problems[:3]))
        if any(L.op(k) for k in range(L.max_arity + 1) if k != 2):
            raise ValueError("a Lie superalgebra has only a binary operation")
        L = LinftyStructure(L.space, L.pairing, 2, (L.op(0), L.op(1), L.op(2)))
        return operations_to_potential(L, max(D, 3))
    if family in ("dim_n1", "dim_n2"):
        n_even = params.get("n_even", 0)
        n_odd = 1 if family == "dim_n1" else 2
        omega = standard_omega(n_even, n_odd, "identity" if n_odd == 1 else "hyperbolic")
        coords = omega.space
        phi = _even_function(coords, n_even, D, params["phi"])
        xi = [TruncatedSuperSeries.variable(coords, D, n_even + k) for k in range(n_odd)]
        pot = phi * xi[0]
        if family == "dim_n2":
            C = scalar(params.get("C", 0))
            if C:
                pot = pot + (series_inverse(phi) * xi[1]).scale(C)
        return FormalLManifold(coords, omega, pot)
    raise ValueError(f"unknown family {family!r}")
