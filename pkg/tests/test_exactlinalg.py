from fractions import Fraction

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import given, strategies as st

from oracles import sympy_rref
from voaspan.exactlinalg import (
    IncrementalBasis,
    NotInSpan,
    SparseMatrix,
    as_scalar,
    nullspace,
    rank,
    rref,
    scalar_str,
    solve_in_span,
    span_basis,
    vec_add,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(st.one_of(st.just(Fraction(0)), rationals), min_size=c, max_size=c),
                               min_size=r, max_size=r)))


def test_identity_rref():
    red, piv, r = rref(SparseMatrix.identity(2))
    assert red == SparseMatrix.identity(2) and piv == [0, 1] and r == 2


def test_zero_rref():
    z = SparseMatrix(2, 2)
    red, piv, r = rref(z)
    assert red == z and piv == [] and r == 0


def test_dependent_rows_rref():
    red, piv, r = rref(SparseMatrix.from_rows([[1, 2], [2, 4]]))
    assert red.to_rows() == [[1, 2], [0, 0]]
    assert piv == [0] and r == 1


def test_nullspace_examples():
    assert nullspace(SparseMatrix.identity(3)) == []
    assert nullspace(SparseMatrix(2, 2)) == [[1, 0], [0, 1]]
    (v,) = nullspace(SparseMatrix.from_rows([[1, 2], [2, 4]]))
    assert v[0] == -2 * v[1] and v[1] != 0


def test_solve_examples():
    assert solve_in_span([[1, 0]], [1, 0]) == [1]
    with pytest.raises(NotInSpan):
        solve_in_span([[1, 0]], [0, 1])
    assert solve_in_span([[1, 1], [1, -1]], [3, 1]) == [2, 1]


def test_scalars_are_exact():
    assert as_scalar("3/6") == mpq(1, 2)
    assert as_scalar(Fraction(-2, 4)) == Fraction(-1, 2)
    assert scalar_str(mpq(-4, 2)) == "-2/1"
    with pytest.raises(TypeError):
        as_scalar(0.5)


@given(matrices())
def test_rref_matches_sympy(rows):
    red, piv, r = rref(SparseMatrix.from_rows(rows))
    ref, ref_piv = sympy_rref(rows)
    assert piv == ref_piv
    assert r == len(ref_piv)
    assert [[sympy.Rational(int(x.numerator), int(x.denominator)) for x in row] for row in red.to_rows()] == ref


@given(matrices())
def test_nullspace_is_kernel_of_right_size(rows):
    m = SparseMatrix.from_rows(rows)
    ns = nullspace(m)
    assert len(ns) == m.cols - rank(m)
    for v in ns:
        assert all(x == 0 for x in m.matvec(v))


@given(matrices(4, 4), st.lists(rationals, min_size=4, max_size=4))
def test_solve_roundtrip(rows, coeffs):
    cols = len(rows[0])
    coeffs = coeffs[: len(rows)]
    target = [sum(c * row[j] for c, row in zip(coeffs, rows)) for j in range(cols)]
    sol = solve_in_span(rows, target)
    assert [sum(c * row[j] for c, row in zip(sol, rows)) for j in range(cols)] == target


@given(st.lists(st.dictionaries(st.integers(0, 5), rationals.filter(bool), max_size=4), max_size=7))
def test_incremental_basis_rank_and_coordinates(vecs):
    ib, kept = span_basis(vecs)
    dense = [[v.get(j, 0) for j in range(6)] for v in vecs]
    assert ib.size == (sympy.Matrix(dense).rank() if dense else 0)
    for v in vecs:
        coords = ib.coordinates(v)
        rebuilt = {}
        for idx, c in coords.items():
            rebuilt = vec_add(rebuilt, vecs[kept[idx]], c)
        assert rebuilt == {k: x for k, x in v.items() if x}


def test_incremental_basis_rejects_outside():
    ib = IncrementalBasis()
    ib.add({0: 1})
    assert ib.contains({0: 5})
    with pytest.raises(NotInSpan):
        ib.coordinates({1: 1})
