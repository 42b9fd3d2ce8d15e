"""C_n subspaces, the representatives X and the constants B, N, Q.

``C_n(V)`` is spanned by all ``a_{-n} b``.  Because ``wt(a_{-n} b) = wt a +
wt b + n - 1`` every graded piece of ``C_n(V)`` only needs producers of
smaller weight, so the window computations here are exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .exactlinalg import IncrementalBasis, NotInSpan, Scalar
from .modealg import (
    Atom,
    Expression,
    ModeOp,
    VAC_BASE,
    VectorStore,
    evaluate,
    store_for,
)
from .virmodel import ModelVector, VOAModel


class NotCofiniteInWindow(ValueError):
    """C_2 codimension does not die out inside the window."""


class SpanDeficit(AssertionError):
    """Enumerated spanning words fail to span a graded piece."""

    def __init__(self, message: str, report: Optional[dict] = None):
        super().__init__(message)
        self.report = report


class PreconditionViolation(ValueError):
    pass


@dataclass
class CnSpace:
    """Basis of ``C_n(V) ∩ V(d)`` with the producer pair behind each basis row."""

    n: int
    weight: int
    dim: int
    producers: List[Tuple[Atom, Atom]]
    rows: List[Dict[int, Scalar]]

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def codim(self) -> int:
        return self.dim - len(self.rows)


def _atom_vec(a: Atom) -> Dict[int, Scalar]:
    return {i: c for i, c in enumerate(a.coords) if c}


def cn_space(voa: VOAModel, n: int, d: int) -> CnSpace:
    """Basis of ``span{a_{-n} b : wt(a_{-n} b) = d}`` inside ``V(d)``."""
    if n < 2:
        raise ValueError("C_n is defined for n >= 2")
    voa.check_depth(d)
    cache = voa.__dict__.setdefault("_cn_cache", {})
    hit = cache.get((n, d))
    if hit is not None:
        return hit
    store = store_for(voa)
    ib = IncrementalBasis()
    producers: List[Tuple[Atom, Atom]] = []
    rows: List[Dict[int, Scalar]] = []
    total = d - n + 1
    for wa in range(1, total + 1):
        wb = total - wa
        for ia in range(voa.dim(wa)):
            a = store.basis_atom(wa, ia)
            for ib_ in range(voa.dim(wb)):
                b = store.basis_atom(wb, ib_)
                prod = store.product(a, -n, b)
                vec = _atom_vec(prod)
                if vec and ib.add(vec):
                    producers.append((a, b))
                    rows.append(vec)
    out = CnSpace(n, d, voa.dim(d), producers, rows)
    cache[(n, d)] = out
    return out


class C2Decomposer:
    """Writes a VOA vector as (X part) + (sum of a_{-2} b) weight by weight."""

    def __init__(self, voa: VOAModel, xs: Sequence[Atom]):
        self.voa = voa
        self.xs = tuple(xs)
        self._bases: Dict[int, Tuple[IncrementalBasis, list]] = {}

    def _basis(self, d: int):
        hit = self._bases.get(d)
        if hit is not None:
            return hit
        c2 = cn_space(self.voa, 2, d)
        ib = IncrementalBasis()
        labels: list = []
        for (a, b), row in zip(c2.producers, c2.rows):
            ib.add(row)
            labels.append(("c2", a, b))
        for x in self.xs:
            if x.weight == d and ib.add(_atom_vec(x)):
                labels.append(("x", x))
        if d == 0:
            ib.add({0: mpq(1)})
            labels.append(("vac",))
        self._bases[d] = (ib, labels)
        return ib, labels

    def decompose(self, a: Atom) -> Tuple[List[Tuple[Scalar, Atom]], List[Tuple[Scalar, Atom, Atom]]]:
        """``(x_terms, c2_terms)`` with ``a = sum c x + sum c' p_{-2} q``."""
        ib, labels = self._basis(a.weight)
        coords = ib.coordinates(_atom_vec(a))
        xs, c2 = [], []
        for k in sorted(coords):
            lab, c = labels[k], coords[k]
            if lab[0] == "x":
                xs.append((c, lab[1]))
            elif lab[0] == "c2":
                c2.append((c, lab[1], lab[2]))
            else:
                raise ValueError("vacuum component has no mode-word decomposition")
        return xs, c2


@dataclass
class CofiniteData:
    X: Tuple[Atom, ...]
    B: int
    N: Optional[int]
    Q: Optional[int]
    window: int
    c2_codims: List[int]
    labels: Tuple[str, ...] = ()
    bound_checks: Dict[str, int] = field(default_factory=dict)
    decomposer: Optional[C2Decomposer] = field(default=None, repr=False, compare=False)

    def to_json(self, store: VectorStore) -> dict:
        return {
            "X": [
                {"label": lab, "weight": x.weight, "coords": [str(c) for c in x.coords],
                 "basis": [list(w) for w in store.voa.basis(x.weight)]}
                for lab, x in zip(self.labels, self.X)
            ],
            "B": self.B,
            "N": self.N,
            "Q": self.Q,
            "window": self.window,
            "N_window_relative": True,
            "c2_codims": self.c2_codims,
            "bound_checks": dict(sorted(self.bound_checks.items())),
        }


def choose_X(voa: VOAModel) -> CofiniteData:
    """Echelon complement of ``C_2(V)`` in each weight (vacuum excluded)."""
    store = store_for(voa)
    xs: List[Atom] = []
    labels: List[str] = []
    codims = [1]
    for d in range(1, voa.w_max + 1):
        c2 = cn_space(voa, 2, d)
        ib = IncrementalBasis()
        for row in c2.rows:
            ib.add(row)
        for i in range(voa.dim(d)):
            if ib.add({i: mpq(1)}):
                a = store.basis_atom(d, i)
                xs.append(a)
        codims.append(c2.codim)
    for j, x in enumerate(xs):
        lab = "w" if x == store.omega else f"x{j}"
        store.name(x, lab)
        labels.append(lab)
    B = max((x.weight for x in xs), default=0)
    _stable_N(codims, voa.w_max, B)
    return CofiniteData(tuple(xs), B, None, None, voa.w_max, codims, tuple(labels))


def _stable_N(codims: Sequence[int], w_max: int, B: int) -> int:
    N = w_max + 1
    while N - 1 >= 1 and codims[N - 1] == 0:
        N -= 1
    band = w_max - N + 1
    if N > w_max or band < max(2, B):
        raise NotCofiniteInWindow(
            f"C_2 codimension still nonzero near the window edge (N={N}, w_max={w_max})")
    return N


def find_N(voa: VOAModel, data: Optional[CofiniteData] = None) -> int:
    """Smallest N with ``V_i ⊆ C_2(V)`` for every ``N <= i <= w_max``.

    The value is relative to the window.  It is only trusted when the band of
    C_2-covered weights is at least ``max(2, B)`` long; otherwise the window
    cannot tell a C_2-cofinite algebra from one whose quotient keeps growing.
    """
    if data is None:
        data = choose_X(voa)
    return _stable_N(data.c2_codims, voa.w_max, data.B)


def compute_constants(voa: VOAModel) -> CofiniteData:
    """X, B, N and ``Q = max(N, 2B - 1) + 1`` with the weight-bound checks."""
    data = choose_X(voa)
    N = find_N(voa, data)
    data.N = N
    data.Q = max(N, 2 * data.B - 1) + 1
    data.decomposer = C2Decomposer(voa, data.X)
    data.bound_checks = _check_weight_bounds(voa, data)
    return data


def _check_weight_bounds(voa: VOAModel, data: CofiniteData, max_k: int = 4) -> Dict[str, int]:
    checks = {"minus_one_products": 0, "decreasing_words": 0, "comparisons": 0}
    # products of -1 modes never exceed B per factor
    for k in range(1, max_k + 1):
        for combo in itertools.product(data.X, repeat=k):
            wt = sum(x.weight for x in combo)
            if wt > voa.w_max:
                continue
            vec = evaluate(Expression.word([ModeOp(x, -1) for x in combo], VAC_BASE), voa)
            assert vec.is_zero or vec.depth == wt, "product of -1 modes is not homogeneous"
            assert wt <= data.B * k
            checks["minus_one_products"] += 1
    # decreasing words are at least l(l+1)/2 heavy, and beat long -1 products
    for d in range(voa.w_max + 1):
        for word in enumerate_voa_spanset(voa, data, d):
            l = len(word)
            assert d >= l * (l + 1) // 2
            checks["decreasing_words"] += 1
            for k in range(2 * data.B, l + 1):
                assert data.B * k < d
                checks["comparisons"] += 1
    # the same comparison past the window, against the lightest decreasing word of each length
    w_min = min(x.weight for x in data.X)
    for k in range(2 * data.B, 2 * data.B + 7):
        for l in range(k, 2 * data.B + 7):
            lightest = sum(w_min + i - 1 for i in range(1, l + 1))
            assert data.B * k < l * (l + 1) // 2 <= lightest
            checks["comparisons"] += 1
    return checks


def enumerate_voa_spanset(voa: VOAModel, data: CofiniteData, d: int) -> List[Tuple[ModeOp, ...]]:
    """Words ``x^1_{-n_1} ... x^k_{-n_k} |0>`` with ``n_1 > ... > n_k > 0`` of weight ``d``."""
    xs = sorted(data.X, key=lambda a: a.sort_key())
    out: List[Tuple[ModeOp, ...]] = []

    def build(remaining: int, min_n: int, acc: Tuple[ModeOp, ...]):
        # acc holds the rightmost factors; the next factor to its left has n >= min_n
        if remaining == 0:
            out.append(acc)
            return
        for n in range(min_n, remaining + 2):
            for x in xs:
                w = x.weight + n - 1
                if 0 < w <= remaining:
                    build(remaining - w, n + 1, (ModeOp(x, -n),) + acc)

    build(d, 1, ())
    out.sort(key=lambda ops: (len(ops), [op.sort_key() for op in ops]))
    return out


def _rank_of(vectors: List[ModelVector], d: int) -> int:
    ib = IncrementalBasis()
    for v in vectors:
        if not v.is_zero:
            ib.add(v.parts.get(d, {}))
    return ib.size


def cn_codims(voa: VOAModel, n: int, up_to: int) -> List[int]:
    return [1 if d == 0 else cn_space(voa, n, d).codim for d in range(up_to + 1)]


def verify_voa_span(voa: VOAModel, data: CofiniteData, up_to: int, raise_on_fail: bool = True) -> dict:
    """Per-weight rank of the enumerated words against ``dim V(d)``."""
    rows = []
    ok = True
    for d in range(up_to + 1):
        words = enumerate_voa_spanset(voa, data, d)
        vecs = [evaluate(Expression.word(w, VAC_BASE), voa) for w in words]
        r = _rank_of(vecs, d)
        dim = voa.dim(d)
        rows.append({"weight": d, "dim": dim, "words": len(words), "rank": r, "pass": r == dim})
        ok = ok and r == dim
    cn = {str(n): cn_codims(voa, n, up_to) for n in range(2, 6)}
    report = {"weights": rows, "pass": ok, "cn_codims": cn,
              "cn_total_codim": {n: sum(v) for n, v in cn.items()}}
    if not ok and raise_on_fail:
        bad = next(r["weight"] for r in rows if not r["pass"])
        raise SpanDeficit(f"VOA spanning words fail to span weight {bad}", report)
    return report


def singular_like_rewrite(voa: VOAModel, data: CofiniteData, xs: Sequence[Atom]) -> Expression:
    """Rewrite ``x^1_{-1} ... x^k_{-1} |0>`` (``k >= Q``) through shorter decreasing words."""
    k = len(xs)
    if data.Q is None or k < data.Q:
        raise PreconditionViolation(f"need at least Q={data.Q} factors, got {k}")
    d = sum(x.weight for x in xs)
    voa.check_depth(d)
    target = evaluate(Expression.word([ModeOp(x, -1) for x in xs], VAC_BASE), voa)
    words = enumerate_voa_spanset(voa, data, d)
    ib = IncrementalBasis()
    kept = []
    for w in words:
        v = evaluate(Expression.word(w, VAC_BASE), voa)
        if ib.add(v.parts.get(d, {})):
            kept.append(w)
    try:
        coords = ib.coordinates(target.parts.get(d, {}))
    except NotInSpan as exc:  # pragma: no cover - excluded by verify_voa_span
        raise AssertionError("spanning words do not span; run verify_voa_span") from exc
    out = Expression(((kept[j], VAC_BASE), c) for j, c in coords.items())
    assert all(len(ops) < k for ops, _ in out.keys())
    assert evaluate(out, voa) == target
    return out
