"""
Exact integer lattice algebra for freetorus.

This module provides integer matrices with arbitrary precision entries, the
Smith normal form with its unimodular change of basis, saturated integer
kernels and the completion of a primitive vector to a basis of Z^n.
No floating point value ever enters this module.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Optional, Sequence

from freetorus.core.errors import InputError, NotUnimodularError

logger = logging.getLogger(__name__)

Vector = tuple[int, ...]


def _as_int(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"matrix entries must be exact integers, got {value!r}")
    return value


@dataclass(frozen=True)
class IntMatrix:
    """Immutable rows x cols matrix of exact integers."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(_as_int(x) for x in row) for row in self.entries)
        if not rows or not rows[0]:
            raise InputError("matrix must have at least one row and one column")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise InputError("matrix rows have different lengths")
        object.__setattr__(self, "entries", rows)

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "IntMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]]) -> "IntMatrix":
        return cls.from_rows(zip(*columns))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls.from_rows([[0] * cols for _ in range(rows)])

    @classmethod
    def diagonal(cls, values: Sequence[int]) -> "IntMatrix":
        n = len(values)
        return cls.from_rows([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def block_diagonal(cls, *blocks: "IntMatrix") -> "IntMatrix":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        data = [[0] * cols for _ in range(rows)]
        r0 = c0 = 0
        for block in blocks:
            for i in range(block.rows):
                for j in range(block.cols):
                    data[r0 + i][c0 + j] = block.entries[i][j]
            r0 += block.rows
            c0 += block.cols
        return cls.from_rows(data)

    @classmethod
    def stack(cls, blocks: Sequence["IntMatrix"]) -> "IntMatrix":
        """Stack matrices with equal column counts vertically."""
        if len({b.cols for b in blocks}) != 1:
            raise InputError("cannot stack matrices with different column counts")
        return cls(tuple(row for b in blocks for row in b.entries))

    # ------------------------------------------------------------------
    # Shape and access
    # ------------------------------------------------------------------

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, index: tuple[int, int]) -> int:
        i, j = index
        return self.entries[i][j]

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.entries)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "IntMatrix":
        return IntMatrix.from_rows([[self.entries[i][j] for j in cols] for i in rows])

    def to_list(self) -> list[list[int]]:
        return [list(row) for row in self.entries]

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise InputError(f"cannot multiply {self.shape} by {other.shape}")
        cols = other.columns()
        return IntMatrix.from_rows(
            [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in self.entries]
        )

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same_shape(other)
        return IntMatrix.from_rows(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same_shape(other)
        return IntMatrix.from_rows(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __neg__(self) -> "IntMatrix":
        return IntMatrix.from_rows([[-a for a in row] for row in self.entries])

    def apply(self, vector: Sequence[int]) -> Vector:
        """Matrix times column vector."""
        if len(vector) != self.cols:
            raise InputError(f"vector of length {len(vector)} does not fit {self.shape}")
        return tuple(sum(a * x for a, x in zip(row, vector)) for row in self.entries)

    def transpose(self) -> "IntMatrix":
        return IntMatrix.from_rows(self.columns())

    def _check_same_shape(self, other: "IntMatrix") -> None:
        if self.shape != other.shape:
            raise InputError(f"shape mismatch {self.shape} vs {other.shape}")

    # ------------------------------------------------------------------
    # Predicates
    # ------------------------------------------------------------------

    def determinant(self) -> int:
        """Exact determinant by fraction-free Bareiss elimination."""
        if not self.is_square:
            raise InputError(f"determinant of non-square {self.shape} matrix")
        m = self.to_list()
        n = self.rows
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if swap is None:
                    return 0
                m[k], m[swap] = m[swap], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return self.is_square and self.determinant() in (1, -1)

    def is_identity(self) -> bool:
        return self.is_square and self == IntMatrix.identity(self.rows)

    def is_zero(self) -> bool:
        return all(a == 0 for row in self.entries for a in row)

    def __str__(self) -> str:
        width = max(len(str(a)) for row in self.entries for a in row)
        return "\n".join(" ".join(str(a).rjust(width) for a in row) for row in self.entries)


# ============================================================================
# Smith normal form
# ============================================================================

@dataclass(frozen=True)
class SnfDecomposition:
    """U * A * V = S with U, V unimodular and S diagonal with d1 | d2 | ..."""

    U: IntMatrix
    S: IntMatrix
    V: IntMatrix

    @property
    def invariant_factors(self) -> list[int]:
        return [self.S[i, i] for i in range(min(self.S.shape))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d != 0)


def _smallest_pivot(a: list[list[int]], t: int) -> Optional[tuple[int, int]]:
    best: Optional[tuple[int, int]] = None
    for i in range(t, len(a)):
        for j in range(t, len(a[0])):
            if a[i][j] != 0 and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                best = (i, j)
    return best


def smith_normal_form(matrix: IntMatrix) -> SnfDecomposition:
    """
    Compute the Smith normal form of an integer matrix.

    The pivot is always the entry of smallest nonzero absolute value in the
    remaining block, ties broken by lowest row then lowest column, so the
    output is reproducible.
    """
    m, n = matrix.shape
    a = matrix.to_list()
    u = IntMatrix.identity(m).to_list()
    v = IntMatrix.identity(n).to_list()

    def swap_rows(i: int, k: int) -> None:
        a[i], a[k] = a[k], a[i]
        u[i], u[k] = u[k], u[i]

    def swap_cols(j: int, k: int) -> None:
        for row in a:
            row[j], row[k] = row[k], row[j]
        for row in v:
            row[j], row[k] = row[k], row[j]

    def add_row(target: int, source: int, factor: int) -> None:
        for mat in (a, u):
            src = mat[source]
            mat[target] = [x + factor * y for x, y in zip(mat[target], src)]

    def add_col(target: int, source: int, factor: int) -> None:
        for mat in (a, v):
            for row in mat:
                row[target] += factor * row[source]

    for t in range(min(m, n)):
        while True:
            pivot = _smallest_pivot(a, t)
            if pivot is None:
                break
            i, j = pivot
            if i != t:
                swap_rows(t, i)
            if j != t:
                swap_cols(t, j)
            p = a[t][t]
            cleared = True
            for i in range(t + 1, m):
                q = a[i][t] // p
                if q:
                    add_row(i, t, -q)
                if a[i][t] != 0:
                    cleared = False
            for j in range(t + 1, n):
                q = a[t][j] // p
                if q:
                    add_col(j, t, -q)
                if a[t][j] != 0:
                    cleared = False
            if not cleared:
                continue
            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p != 0),
                None,
            )
            if offender is None:
                break
            logger.debug(f"SNF step {t}: pivot {p} does not divide row {offender}, merging")
            add_row(t, offender, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    return SnfDecomposition(
        U=IntMatrix.from_rows(u),
        S=IntMatrix.from_rows(a),
        V=IntMatrix.from_rows(v),
    )


# ============================================================================
# Lattices
# ============================================================================

def _solve_rational(columns: Sequence[Vector], target: Sequence[int]) -> Optional[list[Fraction]]:
    """Solve sum x_k * columns[k] = target over Q; None when inconsistent."""
    k = len(columns)
    dim = len(target)
    aug = [[Fraction(columns[c][r]) for c in range(k)] + [Fraction(target[r])] for r in range(dim)]
    pivots: list[int] = []
    row = 0
    for col in range(k):
        sel = next((r for r in range(row, dim) if aug[r][col] != 0), None)
        if sel is None:
            continue
        aug[row], aug[sel] = aug[sel], aug[row]
        pv = aug[row][col]
        aug[row] = [x / pv for x in aug[row]]
        for r in range(dim):
            if r != row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
    if any(aug[r][k] != 0 for r in range(row, dim)):
        return None
    solution = [Fraction(0)] * k
    for r, col in enumerate(pivots):
        solution[col] = aug[r][k]
    return solution


@dataclass(frozen=True)
class LatticeBasis:
    """A saturated basis of a sublattice of Z^ambient_dim."""

    ambient_dim: int
    vectors: tuple[Vector, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.vectors)

    @property
    def is_trivial(self) -> bool:
        return not self.vectors

    def coordinates(self, vector: Sequence[int]) -> Optional[list[Fraction]]:
        """Rational coordinates of vector in this basis, None if outside the span."""
        if len(vector) != self.ambient_dim:
            raise InputError(f"vector of length {len(vector)} in dimension {self.ambient_dim}")
        if not self.vectors:
            return [] if all(x == 0 for x in vector) else None
        return _solve_rational(self.vectors, vector)

    def contains(self, vector: Sequence[int]) -> bool:
        """True when vector lies in the integer span of the basis."""
        coords = self.coordinates(vector)
        return coords is not None and all(c.denominator == 1 for c in coords)

    def same_span(self, other: "LatticeBasis") -> bool:
        return (
            self.ambient_dim == other.ambient_dim
            and self.rank == other.rank
            and all(other.contains(v) for v in self.vectors)
            and all(self.contains(v) for v in other.vectors)
        )

    def to_list(self) -> list[list[int]]:
        return [list(v) for v in self.vectors]


def _normalize_sign(vector: Vector) -> Vector:
    lead = next((x for x in vector if x != 0), 0)
    return tuple(-x for x in vector) if lead < 0 else vector


def integer_kernel(matrix: IntMatrix) -> LatticeBasis:
    """Saturated basis of {k in Z^cols : A k = 0}, read off the SNF column transform."""
    snf = smith_normal_form(matrix)
    basis = tuple(_normalize_sign(snf.V.column(j)) for j in range(snf.rank, matrix.cols))
    return LatticeBasis(ambient_dim=matrix.cols, vectors=basis)


def primitive_generator(vector: Sequence[int]) -> Vector:
    """Divide a nonzero integer vector by the gcd of its entries."""
    entries = tuple(_as_int(x) for x in vector)
    g = reduce(math.gcd, entries, 0)
    if g == 0:
        raise InputError("the zero vector has no primitive generator")
    return tuple(x // g for x in entries)


def complete_to_basis(vector: Sequence[int], dim: int) -> IntMatrix:
    """Return Q in GL(dim, Z) whose first column is the primitive vector."""
    v = tuple(_as_int(x) for x in vector)
    if len(v) != dim:
        raise InputError(f"vector of length {len(v)} cannot be completed in dimension {dim}")
    g = reduce(math.gcd, v, 0)
    if g != 1:
        raise InputError(f"vector {list(v)} is not primitive (gcd {g})")
    snf = smith_normal_form(IntMatrix.from_columns([v]))
    # U v V = e1 and V = (+-1), hence v = V00 * U^-1 e1
    q = unimodular_inverse(snf.U).to_list()
    sign = snf.V[0, 0]
    for row in q:
        row[0] *= sign
    basis = IntMatrix.from_rows(q)
    if basis.column(0) != v:
        raise AssertionError("basis completion lost the prescribed first column")
    return basis


def unimodular_inverse(matrix: IntMatrix) -> IntMatrix:
    """Exact inverse of a matrix with determinant +-1."""
    if not matrix.is_square:
        raise InputError(f"cannot invert non-square {matrix.shape} matrix")
    det = matrix.determinant()
    if det not in (1, -1):
        raise NotUnimodularError(det)
    n = matrix.rows
    aug = [
        [Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(n)]
        for i, row in enumerate(matrix.entries)
    ]
    for col in range(n):
        sel = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[sel] = aug[sel], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    inverse = [[x for x in row[n:]] for row in aug]
    if any(x.denominator != 1 for row in inverse for x in row):
        raise AssertionError("inverse of a unimodular matrix is not integral")
    return IntMatrix.from_rows([[int(x) for x in row] for row in inverse])


def matrix_power(matrix: IntMatrix, exponent: int) -> IntMatrix:
    """A^n for any integer n; negative powers require a unimodular matrix."""
    if exponent < 0:
        matrix = unimodular_inverse(matrix)
        exponent = -exponent
    result = IntMatrix.identity(matrix.rows)
    base = matrix
    while exponent:
        if exponent & 1:
            result = result @ base
        exponent >>= 1
        if exponent:
            base = base @ base
    return result


def sublattice_index(generators: IntMatrix) -> int:
    """Index of the lattice spanned by the columns; 0 when the index is infinite."""
    snf = smith_normal_form(generators)
    if not generators.is_square or snf.rank < generators.cols:
        return 0
    return math.prod(snf.invariant_factors)


def random_unimodular(
    dim: int, rng: random.Random, steps: int = 10, bound: int = 2
) -> IntMatrix:
    """Product of at most `steps` random elementary matrices."""
    result = IntMatrix.identity(dim).to_list()
    for _ in range(rng.randint(0, steps)):
        kind = rng.choice(("add", "add", "swap", "negate")) if dim > 1 else "negate"
        if kind == "add":
            i, j = rng.sample(range(dim), 2)
            k = rng.choice([x for x in range(-bound, bound + 1) if x])
            result[i] = [x + k * y for x, y in zip(result[i], result[j])]
        elif kind == "swap":
            i, j = rng.sample(range(dim), 2)
            result[i], result[j] = result[j], result[i]
        else:
            i = rng.randrange(dim)
            result[i] = [-x for x in result[i]]
    return IntMatrix.from_rows(result)
