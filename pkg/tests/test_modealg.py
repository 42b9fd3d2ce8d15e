from fractions import Fraction
from math import comb

import pytest
from gmpy2 import mpq
from hypothesis import assume, given, strategies as st

from voaspan.cofinite import singular_like_rewrite
from voaspan.modealg import (
    GEN_BASE,
    VACUUM,
    VAC_BASE,
    Atom,
    BadRewrite,
    Composite,
    Expression,
    ModeOp,
    NotARepeat,
    UnresolvableProduct,
    borcherds_residual,
    commutator_swap,
    evaluate,
    expand_minus_one_product,
    filtration_level,
    iterate_expand,
    lambda_splits,
    ops_weight,
    parse_expression,
    repeat_reduce,
    residue_repeat_identity,
    store_for,
    wt_mode,
)
from voaspan.virmodel import LEE_YANG_C, VERMA, ModelVector, act_lie_mode, build_module, build_virasoro_voa


@pytest.fixture(scope="module")
def universal():
    voa = build_virasoro_voa(LEE_YANG_C, 10, simple=False)
    return voa, store_for(voa)


def vec(space, d, coeffs):
    return ModelVector(space, {d: {i: mpq(coeffs[i % len(coeffs)]) for i in range(space.dim(d))}})


def test_wt_mode_examples(ly_store):
    assert wt_mode(ly_store.omega, 1) == 0
    assert wt_mode(VACUUM, -1) == 0
    assert wt_mode(ly_store.omega, -3) == 4


def test_lambda_splits_worked_examples():
    s3 = {(s.lam, s.lam_bar) for s in lambda_splits(8, 3)}
    assert ((2, 5, 8), (7, 6, 4, 3, 1)) in s3
    s4 = {(s.lam, s.lam_bar) for s in lambda_splits(8, 4)}
    assert ((3, 4, 6, 7), (8, 5, 2, 1)) in s4
    one = [(s.lam, s.lam_bar) for i in (0, 1) for s in lambda_splits(1, i)]
    assert sorted(one) == [((), (1,)), ((1,), ())]


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
def test_lambda_split_invariants(ni):
    n, i = ni
    splits = lambda_splits(n, i)
    assert len(splits) == comb(n, i)
    assert splits == lambda_splits(n, i)
    for s in splits:
        assert list(s.lam) == sorted(s.lam) and list(s.lam_bar) == sorted(s.lam_bar, reverse=True)
        assert sorted(s.lam + s.lam_bar) == list(range(1, n + 1))


def test_lambda_splits_rejects_bad_i():
    with pytest.raises(ValueError):
        lambda_splits(3, 4)


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 3), st.lists(st.integers(-2, 2), min_size=1, max_size=3))
def test_commutator_swap_reproduces_virasoro_bracket(ly_module, a, b, d, coeffs):
    M = ly_module
    om = store_for(M.voa).omega
    assume(d - a - b + 2 <= M.w_max and d - a + 1 <= M.w_max and d - b + 1 <= M.w_max)
    v = vec(M, d, coeffs)
    word = ((ModeOp(om, a), ModeOp(om, b)), GEN_BASE)
    swapped = commutator_swap(word, 0, store_for(M.voa))
    corrections = swapped - Expression.word((ModeOp(om, b), ModeOp(om, a)))
    # omega_a = L(a-1)
    la, lb = a - 1, b - 1
    bracket = act_lie_mode(M, la, act_lie_mode(M, lb, v)) - act_lie_mode(M, lb, act_lie_mode(M, la, v))
    assert evaluate(corrections.with_base(None), M, v) == bracket
    expect = act_lie_mode(M, la + lb, v).scale(la - lb)
    if la + lb == 0:
        expect = expect + v.scale(M.c * (la ** 3 - la) / 12)
    assert bracket == expect


def test_commutator_swap_invariants(ly_store, ly_module):
    om, u3 = ly_store.omega, ly_store.atom_of_word((3,))
    ops = (ModeOp(om, 1), ModeOp(u3, -2), ModeOp(om, -1))
    out = commutator_swap((ops, GEN_BASE), 0, ly_store)
    lvl = filtration_level(ops)
    for (o, _), _c in out.items():
        assert ops_weight(o) == ops_weight(ops)
        if o != (ModeOp(u3, -2), ModeOp(om, 1), ModeOp(om, -1)):
            assert filtration_level(o) < lvl
    assert evaluate(out, ly_module) == evaluate(Expression.word(ops), ly_module)


def test_commutator_with_vacuum_is_transposition(ly_store):
    ops = (ModeOp(VACUUM, -1), ModeOp(ly_store.omega, -2))
    out = commutator_swap((ops, GEN_BASE), 0, ly_store)
    assert out == Expression.word(tuple(reversed(ops)))


@pytest.mark.parametrize("h", [Fraction(3, 7), Fraction(-1), Fraction(2)])
def test_iterate_expand_matches_direct(universal, h):
    voa, store = universal
    M = build_module(voa, h, 8, VERMA)
    om = store.omega
    comp = Composite(om, 1, om)
    target = M.vector((2,))
    direct = evaluate(Expression.word([ModeOp(comp, -3)], None), M, target)
    assert evaluate(iterate_expand(comp, -3, 2), M, target) == direct
    assert not direct.is_zero


@given(st.integers(0, 2), st.integers(-2, 2), st.integers(0, 2), st.lists(st.integers(-2, 2), min_size=1, max_size=2))
def test_iterate_expand_random(universal, r, q, d, coeffs):
    voa, store = universal
    M = build_module(voa, Fraction(3, 7), 7, VERMA)
    om, u3 = store.omega, store.atom_of_word((3,))
    comp = Composite(om, r, u3)
    assume(0 <= d + comp.weight - q - 1 <= 7)
    t = vec(M, d, coeffs)
    direct = evaluate(Expression.word([ModeOp(comp, q)], None), M, t)
    assert evaluate(iterate_expand(comp, q, d), M, t) == direct


def test_iterate_r0_is_commutator(ly_store, ly_module):
    om = ly_store.omega
    for q in (-2, -1, 0, 1):
        lhs = evaluate(iterate_expand(Composite(om, 0, om), q, 1), ly_module, ly_module.vector((1,)))
        comm = Expression.word((ModeOp(om, 0), ModeOp(om, q)), None) - Expression.word((ModeOp(om, q), ModeOp(om, 0)), None)
        assert lhs == evaluate(comm, ly_module, ly_module.vector((1,)))


def test_iterate_creation_axiom(ly_store, ly_module):
    om = ly_store.omega
    for q in (-2, -1, 0, 1):
        t = vec(ly_module, 2, [1, 3])
        got = evaluate(iterate_expand(Composite(om, 1, VACUUM), q, 2), ly_module, t)
        assert got == evaluate(Expression.word([ModeOp(om, q)], None), ly_module, t)


def test_repeat_reduce(ly_store, ly_module):
    om, u3 = ly_store.omega, ly_store.atom_of_word((3,))
    cases = [
        (ModeOp(om, -1), ModeOp(om, -1)),
        (ModeOp(om, -2), ModeOp(om, -2)),
        (ModeOp(om, -1), ModeOp(om, -1), ModeOp(om, 0)),
        (ModeOp(u3, -1), ModeOp(om, -1), ModeOp(om, -1)),
    ]
    for ops in cases:
        p = 0 if ops[0].index == ops[1].index else 1
        out = repeat_reduce((ops, GEN_BASE), p, ly_store)
        assert evaluate(out, ly_module) == evaluate(Expression.word(ops), ly_module)
    out = repeat_reduce(((ModeOp(om, -2), ModeOp(om, -2)), GEN_BASE), 0, ly_store)
    for (o, _), _c in out.items():
        assert ops_weight(o) == 2 * wt_mode(om, -2)
        assert any(op.index < -2 or op.index >= 0 for op in o)


def test_repeat_reduce_rejects_unequal(ly_store):
    om = ly_store.omega
    with pytest.raises(NotARepeat):
        repeat_reduce(((ModeOp(om, -1), ModeOp(om, -2)), GEN_BASE), 0, ly_store)


def test_minus_one_single_factor(ly_store, ly_module):
    om = ly_store.omega
    exp = expand_minus_one_product([om], VACUUM)
    # negative modes come only from the creation sum, nonnegative ones only from the other
    assert {t.split.i for t in exp.terms(-2, 3)} == {1}
    assert {t.split.i for t in exp.terms(1, 3)} == {0}
    for p in (-2, 1):
        coeff = exp.coefficient(p, 3)
        assert coeff and all(c > 0 for _, c in coeff.items())
        t = vec(ly_module, 3, [1, -1, 2])
        assert evaluate(coeff, ly_module, t) == evaluate(Expression.word([ModeOp(om, p)], None), ly_module, t)


def test_minus_one_lowest_term_ordering(ly_store):
    om, u3 = ly_store.omega, ly_store.atom_of_word((3,))
    exp = expand_minus_one_product([om, u3], VACUUM)
    zero_terms = [t for t in exp.terms(1, 0) if t.split.i == 0 and t.right_m == (0, 0)]
    assert len(zero_terms) == 1
    assert zero_terms[0].ops == (ModeOp(u3, 0), ModeOp(om, 0)) and zero_terms[0].z_exponent == -2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_minus_one_coefficients_match_nested(ly_store, ly_module, n):
    om = ly_store.omega
    exp = expand_minus_one_product([om] * n, VACUUM)
    comp = exp.composite
    for p in range(-2, 2 * n):
        for d in range(0, 4):
            if d + exp.weight - p - 1 > ly_module.w_max or d + exp.weight - p - 1 < 0:
                continue
            t = vec(ly_module, d, [1, -2, 3])
            direct = evaluate(Expression.word([ModeOp(comp, p)], None), ly_module, t)
            assert evaluate(exp.coefficient(p, d), ly_module, t) == direct


def test_residue_repeat_identity(ly_voa, ly_store, ly_data, ly_module):
    xs = [ly_store.omega] * ly_data.Q
    rhs = singular_like_rewrite(ly_voa, ly_data, xs)
    for d in range(0, 3):
        out = residue_repeat_identity(xs, 0, rhs, d, ly_store)
        t = vec(ly_module, d, [1, 2])
        direct = evaluate(Expression.word([ModeOp(x, 0) for x in xs], None), ly_module, t)
        assert evaluate(out, ly_module, t) == direct
        for (o, _), _c in out.items():
            assert not (len(o) == ly_data.Q and all(op.index == 0 for op in o))
    exp = expand_minus_one_product(xs, VACUUM)
    for term in exp.terms(ly_data.Q - 1, 2):
        if term.split.i >= 1:
            assert any(op.index <= -1 for op in term.ops)


def test_residue_identity_gate(ly_store, ly_data):
    xs = [ly_store.omega] * ly_data.Q
    bogus = Expression.word([ModeOp(ly_store.omega, -7)], VAC_BASE)
    with pytest.raises(BadRewrite):
        residue_repeat_identity(xs, 0, bogus, 0, ly_store)


def test_borcherds_examples(ly_store, ly_module):
    om = ly_store.omega
    t = ly_module.vector((2,))
    assert borcherds_residual(ly_module, om, om, 0, 3, 1, t).is_zero
    for k, q in [(1, 2), (-1, 0), (2, -1)]:
        assert borcherds_residual(ly_module, om, om, k, q, 0, t).is_zero
        assert borcherds_residual(ly_module, om, om, 0, q, k, t).is_zero


def test_borcherds_detects_wrong_model(ly_store):
    # a Verma module of the simple VOA is not a module, so the identity must fail somewhere
    M = build_module(ly_store.voa, Fraction(3, 7), 6, VERMA)
    u = ly_store.atom_of_word((2, 2))
    bad = [borcherds_residual(M, u, u, k, q, -1, M.generator()).is_zero
           for k in range(-2, 1) for q in range(-2, 1)]
    assert not all(bad)


def test_parse_expression(ly_store, ly_module):
    e = parse_expression("w[-2]w[-2]|h> - 2/3*L[-2]|h>", ly_store)
    assert len(e) == 2
    om = ly_store.omega
    assert e.coefficient((ModeOp(om, -2), ModeOp(om, -2))) == 1
    assert e.coefficient((ModeOp(om, -1),)) == Fraction(-2, 3)
    assert parse_expression("L[-2]|0>", ly_store) == parse_expression("w[-1]|0>", ly_store)
    for bad in ("w[-1]", "w[-1 |0>", "q[2]|0>"):
        with pytest.raises((ValueError, KeyError)):
            parse_expression(bad, ly_store)


def test_unresolvable_product(ly_store):
    big = ly_store.atom_of_word((ly_store.voa.w_max,))
    with pytest.raises(UnresolvableProduct):
        ly_store.product(big, -2, ly_store.omega)


def test_expression_is_canonical(ly_store):
    om = ly_store.omega
    a = Expression.word([ModeOp(om, -1)]) + Expression.word([ModeOp(om, -3)])
    b = Expression.word([ModeOp(om, -3)]) + Expression.word([ModeOp(om, -1)])
    assert list(a.items()) == list(b.items())
    assert not (a - b)
    assert Atom(0, (mpq(1),)) == VACUUM
