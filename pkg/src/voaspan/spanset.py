"""Finite-repeat spanning sets for lowest-weight modules and the normalizer.

A spanning element is a word ``x^1_{i_1} ... x^k_{i_k} w`` over X with

* ``i_1 <= i_2 <= ... <= i_k < L``,
* negative indices pairwise distinct,
* each nonnegative index value used at most ``Q - 1`` times.

Counting is per index value, whichever X-vectors carry it.

:func:`normalize` rewrites any mode word into such elements.  Indices are
fixed from the top down: a word is first made valid at every index above
``thr``, then the block of modes at ``thr`` is repaired.  Every recursive call
carries the measure ``(t, K, c)`` (filtration level, ``K = -thr``, number of
modes at ``thr``) and asserts that it strictly decreases.
"""
from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .cofinite import CofiniteData, SpanDeficit, singular_like_rewrite
from .exactlinalg import IncrementalBasis
from .modealg import (
    Atom,
    Composite,
    Expression,
    GEN_BASE,
    ModeOp,
    Ops,
    commutator_terms,
    filtration_level,
    iterate_terms,
    ops_weight,
    repeat_reduce,
    residue_repeat_identity,
    simplify_ops,
    store_for,
    suffix_depths,
)
from .virmodel import GradedSpace, ModelVector, OutOfWindow

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class WindowTooSmall(OutOfWindow):
    """The a-priori bound on leading indices exceeds the model window."""


def compute_L(module: GradedSpace, xs: Sequence[Atom]) -> int:
    """``1 + max l_x`` where ``l_x`` is the top nonnegative mode with ``x_l w != 0``; 0 if none."""
    store = store_for(module.voa)
    best = -1
    for x in xs:
        for l in range(x.weight - 1, -1, -1):
            if store.mode_column(module, x, l, 0, 0):
                best = max(best, l)
                break
    return best + 1


@dataclass(frozen=True)
class SpanningElement:
    ops: Ops
    indices: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return ops_weight(self.ops)


def violations(indices: Sequence[int], Q: int, L: int) -> List[int]:
    """Index values breaking the spanning conditions (sorted input assumed)."""
    bad = []
    for m, c in Counter(indices).items():
        if m >= L or (m < 0 and c > 1) or (m >= 0 and c > Q - 1):
            bad.append(m)
    return sorted(bad)


def is_spanning_element(ops: Sequence[ModeOp], xs: Sequence[Atom], Q: int, L: int) -> bool:
    xset = set(xs)
    if any(op.vector not in xset for op in ops):
        return False
    idx = [op.index for op in ops]
    if idx != sorted(idx):
        return False
    return not violations(idx, Q, L)


def enumerate_module_spanset(module: GradedSpace, data: CofiniteData, L: int, d: int) -> List[SpanningElement]:
    """Spanning elements of depth ``d`` (words vanishing for grading reasons dropped)."""
    xs = sorted(data.X, key=lambda a: a.sort_key())
    Q = data.Q
    out: List[SpanningElement] = []
    # nonnegative modes may lower the depth by at most L - 1 each
    cap = d + max(L - 1, 0) * L * (Q - 1)

    # build right to left: the next op to the left has index <= current
    def build(ops: Tuple[ModeOp, ...], depth: int, top: int, counts: Dict[int, int]):
        if depth == d:
            out.append(SpanningElement(ops, tuple(op.index for op in ops)))
        # any further op raises the index ceiling no higher than ``top``
        for i in range(top, -(cap + 2), -1):
            c = counts.get(i, 0)
            if (i < 0 and c >= 1) or (i >= 0 and c >= Q - 1):
                continue
            for x in xs:
                nd = depth + x.weight - i - 1
                if nd < 0 or nd > cap:
                    continue
                # equal indices: keep X-order nondecreasing left to right
                if ops and ops[0].index == i and x.sort_key() > ops[0].vector.sort_key():
                    continue
                counts[i] = c + 1
                build((ModeOp(x, i),) + ops, nd, i, counts)
                counts[i] = c

    build((), 0, L - 1, {})
    out.sort(key=lambda e: (len(e.ops), [op.sort_key() for op in e.ops]))
    assert len(set(e.ops for e in out)) == len(out)
    return out


@dataclass
class TraceEntry:
    rule: str
    t: int
    K: int
    count: int
    terms: int
    parent: Optional[Tuple[int, int, int]] = None  # measure of the enclosing repair

    @property
    def measure(self) -> Tuple[int, int, int]:
        return (self.t, self.K, self.count)

    def line(self) -> str:
        head = f"{self.rule} t={self.t} K={self.K} c={self.count} terms={self.terms}"
        if self.parent is None:
            return head
        return head + " < ({}, {}, {})".format(*self.parent)


@dataclass
class NormalizationState:
    D: int
    t: int
    L: int
    Q: int
    trace: List[TraceEntry] = field(default_factory=list)
    bound_ok: bool = True

    @property
    def part3_bound(self) -> int:
        return self.D + (self.t - 1) * self.L


class Normalizer:
    """Rewrites mode words on a module into spanning elements.

    One instance holds the caches for a ``(module, data, L)`` triple; results
    are exact and independent of call order.
    """

    def __init__(self, module: GradedSpace, data: CofiniteData, L: int):
        self.module = module
        self.voa = module.voa
        self.store = store_for(self.voa)
        self.data = data
        self.L = L
        self.Q = data.Q
        self.xs = tuple(data.X)
        self.xset = set(self.xs)
        self._canon: Dict[Ops, Expression] = {}
        self._valid: Dict[Tuple[Ops, int], Expression] = {}
        self._residue: Dict[Tuple[Tuple[Atom, ...], int, int], Expression] = {}
        self._rhs: Dict[Tuple[Atom, ...], Expression] = {}
        self.trace: List[TraceEntry] = []

    # -- helpers ---------------------------------------------------------

    def _floor(self, ops: Ops) -> int:
        """Lowest index any rewrite of this word can reach."""
        return -(ops_weight(ops) + 1)

    def _op_key(self, op: ModeOp):
        return op.sort_key()

    def _log(self, rule: str, measure: Tuple[int, int, int], terms: int,
             parent: Optional[Tuple[int, int, int]]) -> None:
        self.trace.append(TraceEntry(rule, measure[0], measure[1], measure[2], terms, parent))

    # -- Part I: decompose and sort ----------------------------------------

    def canon(self, ops: Ops) -> Expression:
        """Sorted X-words equal to ``ops |w>``, with trivially zero words dropped."""
        hit = self._canon.get(ops)
        if hit is not None:
            return hit
        res = self._canon_uncached(ops)
        self._canon[ops] = res
        return res

    def _canon_uncached(self, ops: Ops) -> Expression:
        simp = simplify_ops(ops)
        if simp is None:
            return Expression()
        coeff, ops = simp
        depths = suffix_depths(ops)
        if depths is None:
            return Expression()
        if coeff != 1:
            return self.canon(ops).scale(coeff)
        # replace the first non-X vector
        for p, op in enumerate(ops):
            if op.vector in self.xset:
                continue
            a = self.store.value(op.vector)
            if a.weight < 0 or a.is_zero:
                return Expression()
            if a.weight == 0:
                return self.canon(ops[:p] + (ModeOp(a, op.index),) + ops[p + 1:])
            x_terms, c2_terms = self.data.decomposer.decompose(a)
            acc: List[Expression] = []
            for c, x in x_terms:
                acc.append(self.canon(ops[:p] + (ModeOp(x, op.index),) + ops[p + 1:]).scale(c))
            for c, u, v in c2_terms:
                comp = Composite(u, 2, v)
                for cc, mid in iterate_terms(comp, op.index, depths[p + 1]):
                    acc.append(self.canon(ops[:p] + mid + ops[p + 1:]).scale(c * cc))
            return _sum(acc)
        # all X: bubble the first descent
        for p in range(len(ops) - 1):
            a, b = ops[p], ops[p + 1]
            if self._op_key(a) > self._op_key(b):
                acc = [self.canon(ops[:p] + (b, a) + ops[p + 2:])]
                for c, mid in commutator_terms(self.store, a.vector, a.index, b.vector, b.index):
                    acc.append(self.canon(ops[:p] + (mid,) + ops[p + 2:]).scale(c))
                return _sum(acc)
        if ops and ops[-1].index >= self.L:
            return Expression()
        return Expression.word(ops, GEN_BASE)

    # -- Part II: top-down repair -------------------------------------------

    def valid_down_to(self, ops: Ops, thr: int, parent: Optional[Tuple[int, int, int]] = None) -> Expression:
        """Sorted X-words equal to ``ops |w>`` obeying the rules at every index ``>= thr``.

        ``parent`` is the measure of the repair that produced ``ops``; every
        repair started from here must have a strictly smaller measure.
        """
        t = filtration_level(ops)
        K = -thr
        if parent is not None:
            here = (t, K, sum(1 for op in ops if op.index == thr))
            assert here < parent, f"measure did not decrease: {here} !< {parent}"
        key = (ops, thr)
        hit = self._valid.get(key)
        if hit is not None:
            return hit
        if thr >= self.L:
            res = self.canon(ops)
        else:
            above = self.valid_down_to(ops, thr + 1, (t, K, 0))
            acc = []
            for (w, _), c in above.items():
                n_at = sum(1 for op in w if op.index == thr)
                if (thr < 0 and n_at > 1) or (thr >= 0 and n_at > self.Q - 1):
                    m_w = (filtration_level(w), K, n_at)
                    if parent is not None:
                        assert m_w < parent, f"measure did not decrease: {m_w} !< {parent}"
                    acc.append(self._fix(w, thr, m_w, parent).scale(c))
                else:
                    acc.append(Expression.word(w, GEN_BASE, c))
            res = _sum(acc)
        self._valid[key] = res
        return res

    def _fix(self, w: Ops, thr: int, measure, parent=None) -> Expression:
        start = next(j for j, op in enumerate(w) if op.index == thr)
        prefix, rest = w[:start], w[start:]
        if prefix:
            # shorter suffix has lower filtration level
            inner = self.valid_down_to(rest, thr, measure)
            acc = []
            for (w2, _), c in inner.items():
                for (w3, _), c3 in self.canon(prefix + w2).items():
                    if _same_above(w3, prefix + w2, thr):
                        acc.append(Expression.word(w3, GEN_BASE, c * c3))
                    else:
                        acc.append(self.valid_down_to(w3, thr, measure).scale(c * c3))
            self._log("tail", measure, len(inner), parent)
            return _sum(acc)
        if thr >= 0:
            pieces = self._residue_step(w, thr)
            rule = "residue"
        else:
            pieces = repeat_reduce((w, GEN_BASE), 0, self.store)
            rule = "repeat" if thr < -1 else "repeat-1"
        self._log(rule, measure, len(pieces), parent)
        acc = []
        for (w2, _), c in pieces.items():
            acc.append(self._continue(w2, thr, measure).scale(c))
        return _sum(acc)

    def _continue(self, ops: Ops, thr: int, measure) -> Expression:
        # composites and non-X vectors are resolved before measuring
        if all(op.vector in self.xset for op in ops):
            return self.valid_down_to(ops, thr, measure)
        acc = []
        for (w, _), c in self.canon(ops).items():
            acc.append(self.valid_down_to(w, thr, measure).scale(c))
        return _sum(acc)

    def _residue_step(self, w: Ops, m: int) -> Expression:
        Q = self.Q
        block, rest = w[:Q], w[Q:]
        xs = tuple(op.vector for op in reversed(block))
        depths = suffix_depths(w)
        d = depths[Q]
        key = (xs, m, d)
        ident = self._residue.get(key)
        if ident is None:
            rhs = self._rhs.get(xs)
            first = rhs is None
            if first:
                rhs = singular_like_rewrite(self.voa, self.data, xs)
                self._rhs[xs] = rhs
            ident = residue_repeat_identity(xs, m, rhs, d, self.store if first else None)
            self._residue[key] = ident
        return Expression(((ops + rest, GEN_BASE), c) for (ops, _), c in ident.items())

    # -- public --------------------------------------------------------------

    def normalize_ops(self, ops: Ops) -> Expression:
        ops = tuple(ops)
        floor = self._floor(ops) - 1
        for op in ops:
            floor = min(floor, op.index)
        return self.valid_down_to(ops, floor)


def _same_above(w3: Ops, w: Ops, thr: int) -> bool:
    return [op for op in w3 if op.index >= thr] == [op for op in w if op.index >= thr]


def _sum(parts: List[Expression]) -> Expression:
    items = []
    for p in parts:
        items.extend(p.items())
    return Expression(items)


def normalize(e: Expression, module: GradedSpace, data: CofiniteData, L: int,
              normalizer: Optional[Normalizer] = None, strict_window: bool = False) -> Tuple[Expression, List[NormalizationState]]:
    """Rewrite ``e`` (words on the module generator) into spanning elements.

    Returns the normal form and one :class:`NormalizationState` per input word
    holding the ``(t, K)`` trace and the leading-index bound check.
    """
    nz = normalizer or Normalizer(module, data, L)
    acc = []
    states = []
    for (ops, base), c in e.items():
        if base != GEN_BASE:
            raise ValueError("normalize acts on words applied to the module generator")
        t = filtration_level(ops)
        D = ops_weight(ops)
        st = NormalizationState(D=D, t=t, L=L, Q=data.Q)
        if strict_window and st.part3_bound > module.w_max:
            raise WindowTooSmall(f"leading-index bound {st.part3_bound} exceeds window {module.w_max}")
        start = len(nz.trace)
        out = nz.normalize_ops(tuple(ops))
        st.trace = nz.trace[start:]
        for (w, _), _c in out.items():
            assert is_spanning_element(w, data.X, data.Q, L), "normal form broke the spanning conditions"
            if w:
                n1 = -w[0].index
                if t >= 1 and n1 > st.part3_bound:
                    st.bound_ok = False
        assert st.bound_ok, "leading index exceeds the a-priori bound"
        states.append(st)
        acc.append(out.scale(c))
    return _sum(acc), states


def _rank(vectors: List[ModelVector], d: int) -> int:
    ib = IncrementalBasis()
    for v in vectors:
        part = v.parts.get(d)
        if part:
            ib.add(part)
    return ib.size


def module_cn_codims(module: GradedSpace, n: int, up_to: int) -> List[int]:
    """``dim M(d) - dim (C_n(M) ∩ M(d))`` with ``C_n(M) = span{v_{-n} m}``."""
    store = store_for(module.voa)
    out = []
    for d in range(up_to + 1):
        ib = IncrementalBasis()
        for wv in range(1, d - n + 2):
            dm = d - wv - n + 1
            for iv in range(module.voa.dim(wv)):
                a = store.basis_atom(wv, iv)
                for im in range(module.dim(dm)):
                    col = store.mode_column(module, a, -n, dm, im)
                    if col:
                        ib.add(col)
        out.append(module.dim(d) - ib.size)
    return out


def verify_module_span(module: GradedSpace, data: CofiniteData, L: int, up_to: int,
                       raise_on_fail: bool = True) -> dict:
    """Rank of evaluated spanning elements per depth, plus C_n(M) codimensions."""
    from .modealg import evaluate_ops

    rows = []
    ok = True
    for d in range(up_to + 1):
        elems = enumerate_module_spanset(module, data, L, d)
        vecs = [evaluate_ops(module, e.ops, module.generator()) for e in elems]
        r = _rank(vecs, d)
        dim = module.dim(d)
        rows.append({"depth": d, "dim": dim, "elements": len(elems), "rank": r, "pass": r == dim})
        ok = ok and r == dim
    cn = {}
    for n in (2, 3, 4):
        codims = module_cn_codims(module, n, up_to)
        last = max((d for d, c in enumerate(codims) if c), default=-1)
        cn[str(n)] = {"codims": codims, "total": sum(codims), "last_nonzero_depth": last,
                      "stabilized": last <= up_to - 2}
    report = {"depths": rows, "pass": ok, "L": L, "Q": data.Q, "cn_codims": cn,
              "finite_counts": [r["elements"] for r in rows]}
    if not ok and raise_on_fail:
        bad = next(r["depth"] for r in rows if not r["pass"])
        raise SpanDeficit(f"spanning elements fail to span depth {bad}", report)
    return report
