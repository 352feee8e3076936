"""Exact lattices, sublattices, cosets and quotient groups.

Bases are held as tuples of :class:`fractions.Fraction`. A lattice is given by
its basis *vectors* ``b_1, ..., b_n``; the basis matrix ``B`` has them as
columns so lattice points are ``B z`` for integer ``z``. A sublattice is
``B X`` for an integer matrix ``X`` whose columns are coefficient vectors.
Floating point only appears in :func:`enumerate_points` (pruning) and in the
cached Cholesky factor.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp

from .enumeration import DEFAULT_CAP, fincke_pohst, upper_cholesky
from .errors import LatticeError, ParentMismatch, SingularBasis, SingularCoefficients

# ---------------------------------------------------------------------------
# exact rational linear algebra (small n, so plain Gaussian elimination)


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite entry {v!r}")
        return Fraction(float(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"cannot read {v!r} as a rational number")


def frac_matrix(rows):
    return tuple(tuple(as_fraction(v) for v in row) for row in rows)


def frac_vector(v):
    return tuple(as_fraction(x) for x in v)


def transpose(M):
    return tuple(zip(*M))


def matmul(A, C):
    Ct = transpose(C)
    return tuple(tuple(sum((a * c for a, c in zip(row, col)), Fraction(0)) for col in Ct) for row in A)


def matvec(A, v):
    return tuple(sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A)


def det(M) -> Fraction:
    A = [list(row) for row in M]
    n = len(A)
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            d = -d
        d *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c, n):
                    A[r][k] -= f * A[c][k]
    return d


def inverse(M):
    n = len(M)
    A = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return tuple(tuple(row[n:]) for row in A)


def _round_half_down(q: Fraction) -> int:
    # nearest integer, ties toward -inf so that +-1/2 are treated identically
    return math.ceil(q - Fraction(1, 2))


def _lcm_den(values):
    return math.lcm(*(v.denominator for v in values)) if values else 1


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice with rational basis vectors ``vectors[i] = b_i``."""

    vectors: tuple

    def __post_init__(self):
        n = len(self.vectors)
        if n == 0 or any(len(v) != n for v in self.vectors):
            raise ValueError("basis must be a non-empty square matrix")
        if self.det == 0:
            raise SingularBasis("basis vectors are linearly dependent")

    @property
    def n(self) -> int:
        return len(self.vectors)

    @cached_property
    def B(self):
        """Basis matrix with the basis vectors as columns (exact)."""
        return transpose(self.vectors)

    @cached_property
    def signed_det(self) -> Fraction:
        return det(self.vectors)

    @cached_property
    def det(self) -> Fraction:
        return abs(self.signed_det)

    @cached_property
    def gram(self):
        return tuple(tuple(sum((a * b for a, b in zip(u, v)), Fraction(0)) for v in self.vectors) for u in self.vectors)

    @cached_property
    def B_inv(self):
        return inverse(self.B)

    @cached_property
    def gram_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.gram])

    @cached_property
    def chol(self) -> np.ndarray:
        """Lower-triangular floating Cholesky factor of the Gram matrix."""
        return upper_cholesky(self.gram_float).T

    @cached_property
    def B_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.B])

    def coords(self, x):
        """Exact coefficient vector ``t`` with ``B t = x``."""
        return matvec(self.B_inv, frac_vector(x))

    def point(self, z):
        return matvec(self.B, frac_vector(z))

    def contains(self, x) -> bool:
        return all(c.denominator == 1 for c in self.coords(x))

    def reduce(self, x):
        """Exact coefficients of ``x`` reduced into ``(-1/2, 1/2]^n``."""
        return tuple(c - _round_half_down(c) for c in self.coords(x))

    def scaled(self, c):
        c = as_fraction(c)
        return Lattice(tuple(tuple(c * x for x in v) for v in self.vectors))

    @cached_property
    def canonical(self) -> "Lattice":
        """The same point set with a Hermite-normal-form basis."""
        flat = [x for v in self.vectors for x in v]
        D = _lcm_den(flat)
        M = Matrix([[int(x * D) for x in row] for row in self.B])
        H = hermite_normal_form(M)
        cols = [tuple(Fraction(int(H[i, j]), D) for i in range(self.n)) for j in range(self.n)]
        return Lattice(tuple(cols))

    def same_points(self, other: "Lattice") -> bool:
        return self.canonical.vectors == other.canonical.vectors


def make_lattice(basis) -> Lattice:
    """Lattice spanned by the given basis vectors (rows of ``basis``).

    Entries may be ints, Fractions, floats (taken exactly) or strings such as
    ``"3/7"`` or ``"0.25"``.
    """
    rows = frac_matrix(basis)
    return Lattice(rows)


def integer_lattice(n: int) -> Lattice:
    return make_lattice([[int(i == j) for j in range(n)] for i in range(n)])


def dual(L: Lattice) -> Lattice:
    """Dual lattice, basis matrix ``B^{-T}``."""
    # columns of B^{-T} are rows of B^{-1}
    return Lattice(L.B_inv)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coset:
    lattice: Lattice
    shift: tuple

    def __post_init__(self):
        object.__setattr__(self, "shift", frac_vector(self.shift))
        if len(self.shift) != self.lattice.n:
            raise ValueError("shift length must equal the lattice dimension")

    @cached_property
    def reduced(self):
        """Exact shift coefficients reduced into ``(-1/2, 1/2]^n``."""
        return self.lattice.reduce(self.shift)

    @property
    def is_lattice(self) -> bool:
        return all(c == 0 for c in self.reduced)


@dataclass(frozen=True)
class SublatticeRep:
    parent: Lattice
    X: tuple
    index: int = field(init=False)

    def __post_init__(self):
        X = tuple(tuple(int(v) for v in row) for row in self.X)
        object.__setattr__(self, "X", X)
        if len(X) != self.parent.n or any(len(r) != self.parent.n for r in X):
            raise ValueError("coefficient matrix must be n x n")
        d = det(frac_matrix(X))
        if d == 0:
            raise SingularCoefficients("coefficient matrix is singular")
        object.__setattr__(self, "index", int(abs(d)))

    @cached_property
    def lattice(self) -> Lattice:
        BX = matmul(self.parent.B, frac_matrix(self.X))
        return Lattice(transpose(BX))

    @cached_property
    def hnf(self):
        H = hermite_normal_form(Matrix(self.X))
        return tuple(tuple(int(H[i, j]) for j in range(len(self.X))) for i in range(len(self.X)))

    def reduce_coeffs(self, c):
        """Canonical representative of integer coefficients ``c`` modulo ``X Z^n``."""
        H = self.hnf
        c = list(int(v) for v in c)
        for i in range(len(c) - 1, -1, -1):
            q = c[i] // H[i][i]
            if q:
                for r in range(i + 1):
                    c[r] -= q * H[r][i]
        return tuple(c)

    def contains_coeffs(self, c) -> bool:
        return all(v == 0 for v in self.reduce_coeffs(c))

    def member_mask(self, Z) -> np.ndarray:
        """Vectorised :meth:`contains_coeffs` for the rows of an integer array."""
        d = self.index
        Xinv = inverse(frac_matrix(self.X))
        adj = np.array([[int(v * d) for v in row] for row in Xinv], dtype=object)
        Y = np.asarray(Z, dtype=object) @ adj.T
        return np.all(Y % d == 0, axis=1).astype(bool)


def as_sublattice(L: Lattice, M) -> SublatticeRep:
    """``M`` (a SublatticeRep of ``L`` or a Lattice inside ``L``) as a SublatticeRep."""
    if isinstance(M, SublatticeRep):
        return M
    cols = [L.coords(v) for v in M.vectors]
    if any(c.denominator != 1 for col in cols for c in col):
        raise LatticeError("not a sublattice of the given lattice")
    return SublatticeRep(L, transpose(tuple(tuple(int(c) for c in col) for col in cols)))


def sublattice(L: Lattice, X) -> SublatticeRep:
    return SublatticeRep(L, tuple(tuple(row) for row in X))


def intersect(M: SublatticeRep, N: SublatticeRep) -> SublatticeRep:
    """``M ∩ N`` as a sublattice of their common parent.

    The integer kernel of ``[X | -Y]`` is read off the column transform of its
    Smith form; its first block gives intersection coefficients.
    """
    if M.parent.vectors != N.parent.vectors:
        raise ParentMismatch("sublattices have different parent bases")
    n = M.parent.n
    A = Matrix(M.X).row_join(-Matrix(N.X))
    D, _, T = smith_normal_decomp(A)
    rank = sum(1 for i in range(n) if D[i, i] != 0)
    kernel = T[:, rank:]
    gens = Matrix(M.X) * kernel[:n, :]
    H = hermite_normal_form(gens)
    return SublatticeRep(M.parent, tuple(tuple(int(H[i, j]) for j in range(n)) for i in range(n)))


@dataclass(frozen=True)
class CosetReps:
    parent: Lattice
    sub: SublatticeRep
    coeffs: tuple  # integer coefficient vectors, one per coset
    invariants: tuple  # Smith diagonal d_1 | d_2 | ... | d_n

    @property
    def reps(self):
        return [self.parent.point(c) for c in self.coeffs]

    def __len__(self):
        return len(self.coeffs)

    def class_of(self, c) -> int:
        """Index of the representative congruent to coefficients ``c``."""
        key = self.sub.reduce_coeffs(c)
        return self._lookup[key]

    @cached_property
    def _lookup(self):
        return {self.sub.reduce_coeffs(c): i for i, c in enumerate(self.coeffs)}


def quotient_reps(L: Lattice, M: SublatticeRep) -> CosetReps:
    """Representatives of ``L / M``, ordered lexicographically in Smith coordinates."""
    if M.parent.vectors != L.vectors:
        raise ParentMismatch("sublattice does not belong to this lattice")
    n = L.n
    D, S, _ = smith_normal_decomp(Matrix(M.X))
    S_inv = S.inv()
    d = [abs(int(D[i, i])) for i in range(n)]
    coeffs = []
    for a in itertools.product(*(range(di) for di in d)):
        c = S_inv * Matrix(a)
        coeffs.append(M.reduce_coeffs(int(v) for v in c))
    return CosetReps(L, M, tuple(coeffs), tuple(d))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointList:
    coset: Coset
    radius: float
    coeffs: np.ndarray  # z with point = B z + shift
    points: np.ndarray
    norms2: np.ndarray

    def __len__(self):
        return len(self.coeffs)


GUARD = 1e-9


def enumerate_points(c: Coset, R: float, cap: int = DEFAULT_CAP) -> PointList:
    """All points ``w`` of the coset with ``||w|| <= R`` (ties included).

    Floating pruning runs on a slightly enlarged ball; any candidate whose
    floating squared norm lies within a relative band of ``R^2`` is settled
    with exact rational arithmetic.
    """
    if R < 0:
        raise ValueError("radius must be non-negative")
    L = c.lattice
    t = c.reduced
    shift_int = [tf - tr for tf, tr in zip(L.coords(c.shift), t)]  # integer vector
    U = L.chol.T
    tf = np.array([float(v) for v in t])
    Z, q = fincke_pohst(U, tf, R * (1 + GUARD) + 1e-300, cap=cap)
    R2 = float(R) ** 2
    near = np.abs(q - R2) <= 4 * GUARD * max(R2, 1e-300)
    keep = q <= R2
    if near.any():
        R2x = as_fraction(float(R)) ** 2
        for i in np.flatnonzero(near):
            coeff = [int(z) + tr for z, tr in zip(Z[i], t)]
            w = matvec(L.B, coeff)
            keep[i] = sum((x * x for x in w), Fraction(0)) <= R2x
    Z, q = Z[keep], q[keep]
    Zs = Z - np.array([int(s) for s in shift_int], dtype=np.int64)
    pts = (Z + tf) @ L.B_float.T
    return PointList(c, float(R), Zs, pts, q)


def orthogonal_splits(L: Lattice, cap: int = DEFAULT_CAP):
    """All splittings ``L = Z v ⊕ K`` with ``K = L ∩ v^⊥``, as pairs of integer
    coefficient data ``(z, K)`` (``v = B z``, columns of ``K`` spanning ``K``).

    Any orthogonal splitting off a rank-one summand has ``|v| det K = det L``
    and ``det K >= lambda_1^{n-1} / (1 + (n-1)/4)^{(n-1)/2}``, which bounds the
    search for ``v``; membership and the index condition are checked exactly.
    """
    n = L.n
    if n == 1:
        return []
    U = upper_cholesky(L.gram_float)
    r0 = min(math.sqrt(float(sum(v * v for v in b))) for b in L.vectors)
    Z, q = fincke_pohst(U, np.zeros(n), r0 * (1 + 1e-9), cap)
    lam1 = math.sqrt(min(float(v) for v in q if v > 0))
    k = n - 1
    bound = float(L.det) * (1 + k / 4) ** (k / 2) / lam1**k
    Z, _ = fincke_pohst(U, np.zeros(n), bound * (1 + 1e-9), cap)
    out = []
    for z in Z:
        z = [int(v) for v in z]
        nz = [v for v in z if v]
        if not nz or nz[0] < 0 or math.gcd(*z) != 1:
            continue
        row = matvec(L.gram, z)
        den = _lcm_den(row)
        r = [int(v * den) for v in row]
        _, _, T = smith_normal_decomp(Matrix([r]))
        K = [[int(T[i, j]) for j in range(1, n)] for i in range(n)]
        M = frac_matrix([[z[i]] + K[i] for i in range(n)])
        if abs(det(M)) == 1:
            out.append((tuple(z), tuple(tuple(row) for row in K)))
    return out
