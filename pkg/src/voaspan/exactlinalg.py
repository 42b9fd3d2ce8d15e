"""Exact linear algebra over the rationals.

Everything here works with exact rationals (``gmpy2.mpq``); no floating point is
ever involved.  Two representations are used:

* :class:`SparseMatrix` -- an immutable ``rows x cols`` matrix storing only
  nonzero entries, with :func:`rref`, :func:`nullspace` and :func:`rank`.
* sparse vectors -- plain ``dict`` objects mapping a sortable key to a nonzero
  rational.  :class:`IncrementalBasis` maintains an echelon form of such
  vectors and is what the graded models use to pick bases and coordinates.

Pivoting is deterministic: the first nonzero column (or smallest key) wins.
"""
from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq
from typing import Dict, Hashable, Iterable, List, Mapping, Sequence, Tuple

Scalar = type(mpq(0))
SparseVec = Dict[Hashable, Scalar]


class NotInSpan(ValueError):
    """Raised when a target vector is not a combination of the given basis."""


def as_scalar(x) -> Scalar:
    """Coerce ints, Fractions, mpq values and ``"p/q"`` strings to a Scalar."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        raise TypeError("floating point values are not accepted")
    return mpq(x)


def scalar_str(x) -> str:
    """Serialize a rational as a ``"p/q"`` string (denominator always shown)."""
    x = as_scalar(x)
    return f"{x.numerator}/{x.denominator}"


class SparseMatrix:
    """Immutable sparse matrix over Q.

    ``entries`` maps ``(row, col)`` to a nonzero Scalar; zeros passed in are
    dropped on construction.
    """

    __slots__ = ("_rows", "_cols", "_entries")

    def __init__(self, rows: int, cols: int, entries: Mapping[Tuple[int, int], object] = ()):
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        clean = {}
        for (i, j), v in dict(entries).items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry {(i, j)} outside {rows}x{cols}")
            v = as_scalar(v)
            if v:
                clean[(i, j)] = v
        self._rows = rows
        self._cols = cols
        self._entries = clean

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[object]], cols: int | None = None) -> "SparseMatrix":
        nrows = len(rows)
        ncols = cols if cols is not None else (len(rows[0]) if rows else 0)
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                entries[(i, j)] = v
        return cls(nrows, ncols, entries)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> Tuple[int, int]:
        return (self._rows, self._cols)

    @property
    def entries(self) -> Dict[Tuple[int, int], Scalar]:
        return dict(self._entries)

    def __getitem__(self, ij: Tuple[int, int]) -> Scalar:
        return self._entries.get(ij, mpq(0))

    def to_rows(self) -> List[List[Scalar]]:
        out = [[mpq(0)] * self._cols for _ in range(self._rows)]
        for (i, j), v in self._entries.items():
            out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._cols, self._rows, {(j, i): v for (i, j), v in self._entries.items()})

    def matvec(self, x: Sequence[object]) -> List[Scalar]:
        if len(x) != self._cols:
            raise ValueError("dimension mismatch")
        out = [mpq(0)] * self._rows
        for (i, j), v in self._entries.items():
            out[i] += v * as_scalar(x[j])
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self._entries == other._entries

    def __hash__(self) -> int:
        return hash((self._rows, self._cols, frozenset(self._entries.items())))

    def __repr__(self) -> str:
        return f"SparseMatrix({self._rows}, {self._cols}, nnz={len(self._entries)})"


def _row_dicts(m: SparseMatrix) -> List[Dict[int, Scalar]]:
    rows: List[Dict[int, Scalar]] = [dict() for _ in range(m.rows)]
    for (i, j), v in m.entries.items():
        rows[i][j] = v
    return rows


def rref(m: SparseMatrix) -> Tuple[SparseMatrix, List[int], int]:
    """Reduced row-echelon form, pivot columns and rank.

    Pivot search runs column by column and takes the first row (in current
    order) holding a nonzero entry, so results are reproducible.
    """
    rows = _row_dicts(m)
    pivots: List[int] = []
    r = 0
    for col in range(m.cols):
        if r >= len(rows):
            break
        piv = next((i for i in range(r, len(rows)) if col in rows[i]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        prow = {j: v * inv for j, v in rows[r].items()}
        rows[r] = prow
        for i in range(len(rows)):
            if i != r and col in rows[i]:
                f = rows[i][col]
                row = rows[i]
                for j, v in prow.items():
                    nv = row.get(j, 0) - f * v
                    if nv:
                        row[j] = nv
                    else:
                        row.pop(j, None)
        pivots.append(col)
        r += 1
    entries = {(i, j): v for i, row in enumerate(rows) for j, v in row.items()}
    return SparseMatrix(m.rows, m.cols, entries), pivots, len(pivots)


def rank(m: SparseMatrix) -> int:
    return rref(m)[2]


def nullspace(m: SparseMatrix) -> List[List[Scalar]]:
    """Basis of ``{x : m x = 0}``, one vector per free column."""
    reduced, pivots, _ = rref(m)
    rows = _row_dicts(reduced)
    pivset = set(pivots)
    basis = []
    for free in range(m.cols):
        if free in pivset:
            continue
        vec = [mpq(0)] * m.cols
        vec[free] = mpq(1)
        for r, pc in enumerate(pivots):
            v = rows[r].get(free)
            if v:
                vec[pc] = -v
        basis.append(vec)
    return basis


def solve_in_span(basis: Sequence[Sequence[object]], target: Sequence[object]) -> List[Scalar]:
    """Coefficients ``c`` with ``sum(c[i] * basis[i]) == target``.

    When the basis is dependent the solution puts zero weight on non-pivot
    vectors.  Raises :class:`NotInSpan` if no solution exists.
    """
    dim = len(target)
    for b in basis:
        if len(b) != dim:
            raise ValueError("all vectors must have the same dimension")
    k = len(basis)
    # augmented system: columns are the basis vectors, last column the target
    entries = {}
    for j, b in enumerate(basis):
        for i, v in enumerate(b):
            entries[(i, j)] = v
    for i, v in enumerate(target):
        entries[(i, k)] = v
    reduced, pivots, _ = rref(SparseMatrix(dim, k + 1, entries))
    if k in pivots:
        raise NotInSpan("target is not in the span of the basis")
    coeffs = [mpq(0)] * k
    for r, pc in enumerate(pivots):
        coeffs[pc] = reduced[(r, k)]
    return coeffs


# -- sparse-vector helpers -------------------------------------------------

def vec_add(a: Mapping, b: Mapping, scale: Scalar = mpq(1)) -> SparseVec:
    """Return ``a + scale * b`` as a new sparse vector."""
    out = dict(a)
    if not scale:
        return out
    for k, v in b.items():
        nv = out.get(k, 0) + scale * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


def vec_iadd(a: SparseVec, b: Mapping, scale: Scalar = mpq(1)) -> SparseVec:
    """In-place ``a += scale * b``."""
    if not scale:
        return a
    for k, v in b.items():
        nv = a.get(k, 0) + scale * v
        if nv:
            a[k] = nv
        else:
            a.pop(k, None)
    return a


def vec_scale(a: Mapping, s: Scalar) -> SparseVec:
    if not s:
        return {}
    return {k: v * s for k, v in a.items()}


class IncrementalBasis:
    """Echelon form of a growing list of sparse vectors.

    ``add`` keeps a vector only if it is independent of those kept so far;
    ``coordinates`` expresses any vector in the span in terms of the kept
    vectors (in insertion order).
    """

    def __init__(self):
        # pivot key -> (reduced row, combination of kept vectors producing it)
        self._rows: Dict[Hashable, Tuple[SparseVec, SparseVec]] = {}
        self._order: List[Hashable] = []
        self.size = 0

    def _reduce(self, vec: Mapping) -> Tuple[SparseVec, SparseVec]:
        v = dict(vec)
        combo: SparseVec = {}
        for piv in self._order:
            c = v.get(piv)
            if c:
                row, rcombo = self._rows[piv]
                vec_iadd(v, row, -c)
                vec_iadd(combo, rcombo, c)
        return v, combo

    def add(self, vec: Mapping) -> bool:
        residual, combo = self._reduce(vec)
        if not residual:
            return False
        piv = min(residual)
        inv = 1 / residual[piv]
        row = vec_scale(residual, inv)
        # row = inv * (vec - combo-part) expressed through kept vectors
        new_combo = vec_scale(combo, -inv)
        new_combo[self.size] = inv
        # keep rows fully reduced with respect to the new pivot
        for p in self._order:
            r, rc = self._rows[p]
            c = r.get(piv)
            if c:
                self._rows[p] = (vec_add(r, row, -c), vec_add(rc, new_combo, -c))
        self._rows[piv] = (row, new_combo)
        self._order.append(piv)
        self.size += 1
        return True

    def contains(self, vec: Mapping) -> bool:
        return not self._reduce(vec)[0]

    def coordinates(self, vec: Mapping) -> SparseVec:
        """Coefficients over kept vectors (keys are insertion indices)."""
        residual, combo = self._reduce(vec)
        if residual:
            raise NotInSpan("vector not in span")
        return combo


def span_basis(vectors: Iterable[Mapping]) -> Tuple[IncrementalBasis, List[int]]:
    """Greedy independent subset; returns the basis object and kept indices."""
    ib = IncrementalBasis()
    kept = []
    for i, v in enumerate(vectors):
        if ib.add(v):
            kept.append(i)
    return ib, kept
