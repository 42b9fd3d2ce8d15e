"""The circle products ``u o_n w``, the spans ``O_n(M)`` and quotient dimensions.

``u o_n w = sum_j C(wt u + n, j) u_{j-2n-2} w``.  Elements of ``O_n(M)`` are
not homogeneous, so a window ``W`` only sees the products whose every
component sits at depth ``<= W``; the quotient dimension is tracked over a
schedule of windows and reported as stabilized only together with the a
priori bound on representatives.
"""
from __future__ import annotations

import math
from typing import Dict, Optional, Sequence, Tuple

from gmpy2 import mpq

from .cofinite import CofiniteData, compute_constants
from .exactlinalg import IncrementalBasis, Scalar
from .modealg import Atom, ModeOp, apply_op, evaluate_ops, store_for
from .spanset import compute_L
from .virmodel import (
    SIMPLE,
    GradedSpace,
    ModelVector,
    act_lie_mode,
    binom,
)


def _as_atom(voa, u) -> Atom:
    if isinstance(u, Atom):
        return u
    return store_for(voa).atom(u)


def circ_n(u, w: ModelVector, n: int) -> ModelVector:
    """``u o_n w`` for a homogeneous VOA vector ``u`` and any module vector ``w``."""
    space = w.space
    a = _as_atom(space.voa, u)
    top = a.weight + n
    total = space.zero()
    for j in range(0, top + 1):
        c = binom(top, j)
        if c:
            total = total + apply_op(space, ModeOp(a, j - 2 * n - 2), w).scale(c)
    for d in total.parts:
        space.check_depth(d)
    return total


def _flat(v: ModelVector) -> Dict[Tuple[int, int], Scalar]:
    return {(d, i): c for d, i, c in v.items()}


def on_span(module: GradedSpace, n: int, W: int) -> IncrementalBasis:
    """Span of the ``u o_n w`` (basis u, basis w) lying entirely at depth ``<= W``."""
    module.check_depth(W)
    store = store_for(module.voa)
    ib = IncrementalBasis()
    for wu in range(1, W - 2 * n):
        for iu in range(module.voa.dim(wu)):
            a = store.basis_atom(wu, iu)
            for dw in range(0, W - wu - 2 * n):
                for iw in range(module.dim(dw)):
                    v = circ_n(a, module.basis_vector(dw, iw), n)
                    if not v.is_zero:
                        ib.add(_flat(v))
    return ib


def representative_bound(module: GradedSpace, data: CofiniteData, L: int, n: int) -> int:
    """Smallest N' such that spanning elements of depth ``>= N'`` have leading index ``<= -2n-2``.

    Equivalently one more than the largest depth of a spanning element whose
    indices all exceed ``-2n-2``.
    """
    floor = -2 * n - 1
    xs = sorted(data.X, key=lambda a: a.sort_key())
    best = -1

    def build(ops, depth, top, counts):
        nonlocal best
        best = max(best, depth)
        for i in range(top, floor - 1, -1):
            c = counts.get(i, 0)
            if (i < 0 and c >= 1) or (i >= 0 and c >= data.Q - 1):
                continue
            for x in xs:
                if ops and ops[0].index == i and x.sort_key() > ops[0].vector.sort_key():
                    continue
                nd = depth + x.weight - i - 1
                if nd < 0:
                    continue
                counts[i] = c + 1
                build((ModeOp(x, i),) + ops, nd, i, counts)
                counts[i] = c

    build((), 0, L - 1, {})
    return best + 1


def an_dim_estimate(module: GradedSpace, n: int, schedule: Sequence[int],
                    data: Optional[CofiniteData] = None, L: Optional[int] = None) -> dict:
    """``dim M_{<=W} - dim O_n(M)_{<=W}`` for each ``W`` in the schedule."""
    if module.kind != SIMPLE:
        raise ValueError("quotient dimensions need an irreducible (SimpleQuotient) module")
    schedule = list(schedule)
    if schedule != sorted(set(schedule)):
        raise ValueError("schedule must be strictly increasing")
    if data is None:
        data = compute_constants(module.voa)
    if L is None:
        L = compute_L(module, data.X)
    dims = []
    for W in schedule:
        total = sum(module.dim(d) for d in range(W + 1))
        dims.append(total - on_span(module, n, W).size)
    bound = representative_bound(module, data, L, n)
    tail_equal = len(dims) >= 3 and dims[-1] == dims[-2] == dims[-3]
    stabilized = tail_equal and bound <= schedule[-1]
    return {
        "n": n,
        "schedule": schedule,
        "dims": dims,
        "representative_bound": bound,
        "stabilized": stabilized,
        "value": dims[-1] if stabilized else None,
        "upper_bound_only": not stabilized,
    }


def l_minus_one_power(voa, x: Atom, s: int) -> Atom:
    """``L(-1)^s x`` as an interned VOA vector."""
    store = store_for(voa)
    v = store.model_vector(x)
    for _ in range(s):
        v = act_lie_mode(voa, -1, v)
    wt = x.weight + s
    return store.intern(Atom(wt, tuple(v.coords(wt))))


def translation_shift_residual(module: GradedSpace, v: Atom, k: int, target: ModelVector) -> ModelVector:
    """``(L(-1)v)_{-k} t - k v_{-k-1} t``; zero for every ``t``."""
    lv = l_minus_one_power(module.voa, v, 1)
    lhs = apply_op(module, ModeOp(lv, -k), target)
    rhs = apply_op(module, ModeOp(v, -k - 1), target).scale(k)
    return lhs - rhs


def leading_reduction_residual(module: GradedSpace, ops: Sequence[ModeOp], n: int) -> ModelVector:
    """Replay of the leading-index reduction for a word with ``-i_1 >= 2n+2``.

    With ``s = -i_1 - 2n - 2`` and ``y = (2n+1)!/(2n+1+s)! L(-1)^s x^1`` one has
    ``x^1_{i_1} R = y o_n R - sum_{j>=1} C(wt y + n, j) y_{j-2n-2} R``; the
    function returns LHS minus RHS on the generator.
    """
    first, rest = ops[0], tuple(ops[1:])
    s = -first.index - 2 * n - 2
    if s < 0:
        raise ValueError("leading index is above -2n-2")
    scale = mpq(math.factorial(2 * n + 1), math.factorial(2 * n + 1 + s))
    raw = l_minus_one_power(module.voa, first.vector, s)
    y = store_for(module.voa).intern(Atom(raw.weight, tuple(c * scale for c in raw.coords)))
    r = evaluate_ops(module, rest, module.generator())
    lhs = evaluate_ops(module, (first,), r)
    rhs = circ_n(y, r, n)
    top = y.weight + n
    for j in range(1, top + 1):
        c = binom(top, j)
        if c:
            rhs = rhs - apply_op(module, ModeOp(y, j - 2 * n - 2), r).scale(c)
    return lhs - rhs
