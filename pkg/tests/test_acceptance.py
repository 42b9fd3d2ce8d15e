"""End-to-end acceptance checks.

Each test records one line in ``RESULTS``; ``conftest.py`` prints them in the
terminal summary, and running this file directly prints them as well.
All comparisons are exact.
"""
import itertools
import random
import time
from fractions import Fraction

import pytest
from gmpy2 import mpq

from oracles import c2_codims as oracle_c2_codims, constants_from_c2
from voaspan.cli import main
from voaspan.cofinite import singular_like_rewrite, verify_voa_span
from voaspan.modealg import (
    GEN_BASE,
    VAC_BASE,
    VACUUM,
    Composite,
    Expression,
    ModeOp,
    borcherds_residual,
    commutator_swap,
    evaluate,
    expand_all_composites,
    expand_minus_one_product,
    filtration_level,
    iterate_expand,
    ops_weight,
    repeat_reduce,
    store_for,
)
from voaspan.spanset import (
    Normalizer,
    enumerate_module_spanset,
    is_spanning_element,
    module_cn_codims,
    normalize,
    verify_module_span,
)
from voaspan.virmodel import LEE_YANG_C, SIMPLE, VERMA, ModelVector, act_lie_mode, build_module, build_virasoro_voa
from voaspan.zhu import an_dim_estimate
from wordgen import random_words

RESULTS = []


def record(n, ok, detail):
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def basis_targets(space, depth):
    for d in range(depth + 1):
        for i in range(space.dim(d)):
            yield space.basis_vector(d, i)


def random_vec(space, d, rng):
    return ModelVector(space, {d: {i: mpq(rng.randint(-3, 3) or 1) for i in range(space.dim(d))}})


def test_1_borcherds_sweep(ly_voa, ly_store):
    vecs = [ly_store.omega, ly_store.atom_of_word((3,)), ly_store.atom_of_word((2, 2))]
    checks = bad = 0
    start = time.perf_counter()
    for h in (Fraction(0), Fraction(-1, 5)):
        M = build_module(ly_voa, h, 5, SIMPLE)
        targets = list(basis_targets(M, 5))
        for u, v in itertools.product(vecs, repeat=2):
            for k, q, r in itertools.product(range(-3, 4), repeat=3):
                for t in targets:
                    checks += 1
                    if not borcherds_residual(M, u, v, k, q, r, t).is_zero:
                        bad += 1
    secs = time.perf_counter() - start
    record(1, bad == 0 and checks > 0, f"{checks} Borcherds residuals, {bad} nonzero, {secs:.1f}s")


def test_2_specializations(ly_module, ly_store):
    rng = random.Random(2)
    M, om, u3 = ly_module, ly_store.omega, ly_store.atom_of_word((3,))
    bracket = 0
    for a, b in itertools.product(range(-3, 4), repeat=2):
        for d in range(3):
            if max(d - a - b + 2, d - a + 1, d - b + 1) > M.w_max:
                continue
            v = random_vec(M, d, rng)
            swapped = commutator_swap(((ModeOp(om, a), ModeOp(om, b)), GEN_BASE), 0, ly_store)
            corr = swapped - Expression.word((ModeOp(om, b), ModeOp(om, a)))
            la, lb = a - 1, b - 1
            expect = act_lie_mode(M, la + lb, v).scale(la - lb)
            if la + lb == 0:
                expect = expect + v.scale(M.c * (la ** 3 - la) / 12)
            assert evaluate(corr.with_base(None), M, v) == expect
            bracket += 1

    universal = build_virasoro_voa(LEE_YANG_C, 10, simple=False)
    ustore = store_for(universal)
    V = build_module(universal, Fraction(3, 7), 7, VERMA)
    pool = [ustore.omega, ustore.atom_of_word((3,)), ustore.atom_of_word((2, 2))]
    iterate = 0
    while iterate < 50:
        comp = Composite(rng.choice(pool), rng.randint(0, 2), rng.choice(pool))
        q, d = rng.randint(-2, 2), rng.randint(0, 2)
        if not 0 <= d + comp.weight - q - 1 <= V.w_max:
            continue
        t = random_vec(V, d, rng)
        direct = evaluate(Expression.word([ModeOp(comp, q)], None), V, t)
        assert evaluate(iterate_expand(comp, q, d), V, t) == direct
        iterate += 1

    repeat = 0
    words = random_words(M, 400, seed=22)
    for ops in words:
        for p in range(len(ops) - 1):
            if ops[p] == ops[p + 1] and ops[p].index < 0:
                out = repeat_reduce((ops, GEN_BASE), p, ly_store)
                assert evaluate(out, M) == evaluate(Expression.word(ops), M)
                repeat += 1
                break
        if repeat == 50:
            break
    while repeat < 50:
        x = rng.choice([om, u3])
        n = rng.randint(-3, -1)
        ops = (ModeOp(x, n), ModeOp(x, n))
        tail = tuple(ModeOp(om, rng.randint(-2, 1)) for _ in range(rng.randint(0, 2)))
        word = ops + tail
        if ops_weight(word) > M.w_max or evaluate(Expression.word(tail), M).is_zero:
            continue
        out = repeat_reduce((word, GEN_BASE), 0, ly_store)
        assert evaluate(out, M) == evaluate(Expression.word(word), M)
        repeat += 1
    record(2, True, f"bracket {bracket} cases, iterate 50 random, repeat 50 random")


def test_3_minus_one_expansion(ly_voa, ly_store):
    M = build_module(ly_voa, Fraction(-1, 5), 10, SIMPLE)
    om = ly_store.omega
    checks = 0
    for n in (1, 2, 3):
        exp = expand_minus_one_product([om] * n, VACUUM)
        comp = exp.composite
        for p in range(-2, 2 * n + 1):
            for d in range(7):
                nd = d + exp.weight - p - 1
                if nd < 0 or nd > M.w_max:
                    continue
                coeff = exp.coefficient(p, d)
                nested = expand_all_composites(Expression.word([ModeOp(comp, p)], None), d)
                for i in range(M.dim(d)):
                    t = M.basis_vector(d, i)
                    direct = evaluate(Expression.word([ModeOp(comp, p)], None), M, t)
                    assert evaluate(coeff, M, t) == evaluate(nested, M, t) == direct
                    checks += 1
    record(3, checks > 0, f"{checks} coefficient/basis-vector matches, n<=3, depth<=6")


def test_4_voa_span(ly_voa, ly_data):
    rep = verify_voa_span(ly_voa, ly_data, 12, raise_on_fail=False)
    ok = rep["pass"] and len(rep["weights"]) == 13 and all(r["rank"] == r["dim"] for r in rep["weights"])
    record(4, ok, "full rank at weights 0..12: " + ",".join(str(r["rank"]) for r in rep["weights"]))


def test_5_constants(ly_data, ly_store, frozen):
    B, N, Q = constants_from_c2(oracle_c2_codims(LEE_YANG_C, 12))
    checks = ly_data.bound_checks
    ok = (ly_data.X == (ly_store.omega,) and ly_data.B == 2 == B
          and ly_data.N == N and ly_data.Q == Q == max(N, 3) + 1
          and [B, N, Q] == frozen["lee_yang"]["B_N_Q"]
          and all(v > 0 for v in checks.values()))
    record(5, ok, f"X={{w}} B={ly_data.B} N={ly_data.N} Q={ly_data.Q}; bound checks {dict(sorted(checks.items()))}")


def test_6_module_span_and_normalizer(ly_voa, ly_module, ly_data, ly_L):
    start = time.perf_counter()
    rep = verify_module_span(ly_module, ly_data, ly_L, 8)
    span_ok = rep["pass"] and all(r["rank"] == r["dim"] for r in rep["depths"])
    big = build_module(ly_voa, Fraction(-1, 5), 10, SIMPLE)
    # long words over few indices force repeats, so every repair rule fires
    words = random_words(big, 100, seed=6, lengths=(4, 7), indices=(-2, 1))
    steps = repaired = 0
    rules = set()
    for ops in words:
        e = Expression.word(ops)
        # fresh caches so every word logs its full repair trace
        out, states = normalize(e, big, ly_data, ly_L, normalizer=Normalizer(big, ly_data, ly_L))
        repaired += bool(states[0].trace)
        rules.update(entry.rule for entry in states[0].trace)
        assert evaluate(out, big) == evaluate(e, big)
        for (w, _), _c in out.items():
            assert is_spanning_element(w, ly_data.X, ly_data.Q, ly_L)
        assert states[0].bound_ok
        for entry in states[0].trace:
            assert entry.t <= filtration_level(ops)
            if entry.parent is not None:
                assert entry.measure < entry.parent
                steps += 1
    secs = time.perf_counter() - start
    ok = span_ok and len(words) == 100 and secs < 60 and rules == {"tail", "repeat", "repeat-1", "residue"}
    record(6, ok, f"module span rank=dim to depth 8; 100 words normalized ({repaired} needed repairs, {steps} decreasing steps), {secs:.1f}s")


def test_7_singular_like(ly_voa, ly_data, ly_store):
    xs = [ly_store.omega] * ly_data.Q
    out = singular_like_rewrite(ly_voa, ly_data, xs)
    target = evaluate(Expression.word([ModeOp(x, -1) for x in xs], VAC_BASE), ly_voa)
    ok = evaluate(out, ly_voa) == target and len(out) > 0
    for ops, _ in out.keys():
        idx = [op.index for op in ops]
        ok = ok and len(ops) < len(xs) and idx == sorted(set(idx))
    record(7, ok, f"w[-1]^{ly_data.Q}|0> = {len(out)} shorter strictly decreasing words")


def test_8_finiteness(ly_voa, ly_module, ly_data, ly_L, frozen):
    stable = {}
    for n in (2, 3, 4):
        codims = module_cn_codims(ly_module, n, 8)
        stable[n] = codims[-1] == codims[-2] == 0
    vac = build_module(ly_voa, 0, 10, SIMPLE)
    zhu = an_dim_estimate(vac, 0, range(4, 11), ly_data, 0)
    counts = [len(enumerate_module_spanset(ly_module, ly_data, ly_L, d)) for d in range(13)]
    ok = all(stable.values()) and zhu["stabilized"] and zhu["value"] == frozen["lee_yang"]["irreducible_count"]
    record(8, ok, f"Cn(M) codims stable {stable}; A(V) dim {zhu['value']}; spanning counts {counts}")


def test_9_determinism(tmp_path):
    argv = ["--wmax", "6", "--seed", "9", "constants", "voa-span", "module-span", "zhu",
            "normalize", "w[-2]w[-1]w[0]|h>", "identities", "--sweep"]
    a, b = tmp_path / "a", tmp_path / "b"
    codes = (main(argv + ["--out", str(a)]), main(argv + ["--out", str(b)]))
    names = ("report.json", "voa_dims.csv", "module_dims.csv")
    same = [(a / n).read_bytes() == (b / n).read_bytes() for n in names if (a / n).exists()]
    ok = codes == (0, 0) and len(same) == 3 and all(same)
    record(9, ok, f"two runs, exit codes {codes}, byte-identical {len(same)} files")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
