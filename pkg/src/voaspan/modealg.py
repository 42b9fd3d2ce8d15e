"""Symbolic mode calculus.

A :class:`ModeWord` is ``coefficient * u1_{i1} u2_{i2} ... uk_{ik} |base>``
where each ``u`` is a homogeneous VOA vector and ``i`` the actual mode
subscript (``u_i``, weight ``wt(u) - i - 1``).  Vectors are either interned
:class:`Atom` values (canonical coordinates over the VOA basis) or structured
:class:`Composite` nodes ``left_{-r} right`` that the iterate formula can
expand into modes of their constituents.

Sums that are infinite as operator identities are cut off using the depth of
the vector being acted on: any term that would pass through a negative depth
is zero in a module graded from depth 0, so only finitely many terms are ever
produced.  All rewrite rules here are exact identities under that convention.
"""
from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass
from gmpy2 import mpq
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .exactlinalg import Scalar, as_scalar, scalar_str
from .virmodel import (
    GradedSpace,
    ModelVector,
    OutOfWindow,
    VOAModel,
    act_vacuum_mode,
    binom,
)

VAC_BASE = "vac"
GEN_BASE = "gen"


class UnresolvableProduct(ValueError):
    """A product ``u_i v`` needed by a rewrite lies above the VOA window."""


class NotARepeat(ValueError):
    """``repeat_reduce`` was pointed at two modes that are not an equal negative pair."""


class BadRewrite(ValueError):
    """A supplied rewriting does not evaluate to the vector it claims to equal."""


# -- vectors --------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """Homogeneous VOA vector given by coordinates over ``voa.basis(weight)``."""

    weight: int
    coords: Tuple[Scalar, ...]

    @property
    def is_zero(self) -> bool:
        return not any(self.coords)

    def sort_key(self):
        return (0, self.weight, self.coords)


@dataclass(frozen=True)
class Composite:
    """The vector ``left_{-r} right`` kept in structured form."""

    left: "Vector"
    r: int
    right: "Vector"

    @property
    def weight(self) -> int:
        return self.left.weight + self.right.weight + self.r - 1

    def sort_key(self):
        return (1, self.weight, self.left.sort_key(), self.r, self.right.sort_key())


Vector = Union[Atom, Composite]

VACUUM = Atom(0, (mpq(1),))


@dataclass(frozen=True)
class ModeOp:
    """The mode ``vector_index``."""

    vector: Vector
    index: int

    @property
    def weight(self) -> int:
        return self.vector.weight - self.index - 1

    def sort_key(self):
        return (self.index, self.vector.sort_key())


Ops = Tuple[ModeOp, ...]
WordKey = Tuple[Ops, Optional[str]]


def wt_mode(v: Vector, n: int) -> int:
    """Weight of the mode ``v_n``: ``wt(v) - n - 1``."""
    return v.weight - n - 1


def ops_weight(ops: Sequence[ModeOp]) -> int:
    return sum(op.weight for op in ops)


def filtration_level(ops: Sequence[ModeOp]) -> int:
    """Sum of the weights of the vectors in a word."""
    return sum(op.vector.weight for op in ops)


def suffix_depths(ops: Sequence[ModeOp], base_depth: int = 0) -> Optional[List[int]]:
    """Depth reached after each op (right to left); ``None`` if one goes negative.

    Entry ``j`` is the depth of ``ops[j:] |base>``; the list has length
    ``len(ops) + 1`` with the base depth last.
    """
    d = base_depth
    out = [d]
    for op in reversed(ops):
        d += op.weight
        if d < 0:
            return None
        out.append(d)
    out.reverse()
    return out


# -- words and expressions --------------------------------------------------

@dataclass(frozen=True)
class ModeWord:
    coefficient: Scalar
    ops: Ops
    base: Optional[str] = GEN_BASE

    @property
    def weight(self) -> int:
        return ops_weight(self.ops)

    @property
    def level(self) -> int:
        return filtration_level(self.ops)


def word_sort_key(key: WordKey):
    ops, base = key
    return (base or "", len(ops), tuple(op.sort_key() for op in ops))


class Expression:
    """Canonical formal sum of mode words with rational coefficients.

    Identical words are merged and zero coefficients dropped; iteration order is
    a fixed total order on words, so equal sums compare and print identically.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Union[Dict[WordKey, Scalar], Iterable[Tuple[WordKey, Scalar]], None] = None):
        acc: Dict[WordKey, Scalar] = {}
        if terms is not None:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, c in items:
                c = as_scalar(c)
                if not c:
                    continue
                nv = acc.get(key, 0) + c
                if nv:
                    acc[key] = nv
                else:
                    acc.pop(key, None)
        self._terms = {k: acc[k] for k in sorted(acc, key=word_sort_key)}

    @classmethod
    def word(cls, ops: Sequence[ModeOp], base: Optional[str] = GEN_BASE, coeff=1) -> "Expression":
        return cls({(tuple(ops), base): as_scalar(coeff)})

    @classmethod
    def zero(cls) -> "Expression":
        return cls()

    def items(self) -> Iterator[Tuple[WordKey, Scalar]]:
        return iter(self._terms.items())

    def terms(self) -> List[ModeWord]:
        return [ModeWord(c, ops, base) for (ops, base), c in self._terms.items()]

    def keys(self):
        return self._terms.keys()

    def coefficient(self, ops: Sequence[ModeOp], base: Optional[str] = GEN_BASE) -> Scalar:
        return self._terms.get((tuple(ops), base), mpq(0))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __add__(self, other: "Expression") -> "Expression":
        return Expression(itertools.chain(self.items(), other.items()))

    def __sub__(self, other: "Expression") -> "Expression":
        return Expression(itertools.chain(self.items(), ((k, -c) for k, c in other.items())))

    def __neg__(self) -> "Expression":
        return self.scale(-1)

    def scale(self, s) -> "Expression":
        s = as_scalar(s)
        return Expression((k, c * s) for k, c in self.items())

    def __rmul__(self, s) -> "Expression":
        return self.scale(s)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expression):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def with_base(self, base: str) -> "Expression":
        return Expression(((ops, base), c) for (ops, _), c in self.items())

    def __repr__(self) -> str:
        return f"Expression({len(self)} terms)"


def expr_sum(parts: Iterable[Expression]) -> Expression:
    items: List[Tuple[WordKey, Scalar]] = []
    for p in parts:
        items.extend(p.items())
    return Expression(items)


# -- the interning store ------------------------------------------------------

class VectorStore:
    """Interns VOA vectors by canonical coordinates and caches products.

    One store is attached to each :class:`VOAModel`; it is the only shared
    mutable state of the calculus and is guarded by a lock.
    """

    def __init__(self, voa: VOAModel):
        self.voa = voa
        self._atoms: Dict[Atom, Atom] = {}
        self._labels: Dict[Atom, str] = {VACUUM: "1"}
        self._values: Dict[Composite, Atom] = {}
        self._products: Dict[Tuple[Atom, int, Atom], Atom] = {}
        self._columns: Dict[tuple, Dict[int, Scalar]] = {}
        self._lock = threading.RLock()
        self.omega = self.atom_of_word((2,), label="w")

    # construction
    def intern(self, atom: Atom) -> Atom:
        with self._lock:
            return self._atoms.setdefault(atom, atom)

    def atom(self, vec: ModelVector, label: Optional[str] = None) -> Atom:
        if vec.space is not self.voa:
            raise ValueError("vector is not in this store's VOA")
        if vec.is_zero:
            raise ValueError("the zero vector has no weight; use Atom coordinates explicitly")
        wt = vec.depth
        a = self.intern(Atom(wt, tuple(vec.coords(wt))))
        if label is not None:
            self.name(a, label)
        return a

    def atom_of_word(self, word: Sequence[int], label: Optional[str] = None) -> Atom:
        word = tuple(word)
        a = self.atom(self.voa.vector(word))
        if label is None and a not in self._labels:
            label = "v(" + ",".join(str(n) for n in word) + ")" if word else "1"
        if label is not None:
            self.name(a, label)
        return a

    def basis_atom(self, d: int, i: int) -> Atom:
        coords = [mpq(0)] * self.voa.dim(d)
        coords[i] = mpq(1)
        a = self.intern(Atom(d, tuple(coords)))
        if a not in self._labels:
            word = self.voa.basis(d)[i]
            self.name(a, "v(" + ",".join(str(n) for n in word) + ")" if word else "1")
        return a

    def name(self, atom: Atom, label: str) -> None:
        with self._lock:
            self._labels[atom] = label

    def label(self, v: Vector) -> str:
        if isinstance(v, Composite):
            return f"({self.label(v.left)}[{-v.r}]{self.label(v.right)})"
        got = self._labels.get(v)
        if got is not None:
            return got
        with self._lock:
            got = self._labels.get(v)
            if got is None:
                got = f"u{len(self._labels)}"
                self._labels[v] = got
        return got

    def lookup(self, label: str) -> Optional[Atom]:
        for a, lab in self._labels.items():
            if lab == label:
                return a
        return None

    # evaluation
    def model_vector(self, v: Vector) -> ModelVector:
        a = self.value(v)
        return ModelVector(self.voa, {a.weight: {i: c for i, c in enumerate(a.coords) if c}})

    def value(self, v: Vector) -> Atom:
        if isinstance(v, Atom):
            return v
        hit = self._values.get(v)
        if hit is not None:
            return hit
        left = self.model_vector(v.left)
        right = self.model_vector(v.right)
        res = act_vacuum_mode(self.voa, left, -v.r, right, check=False)
        wt = v.weight
        a = self.intern(Atom(wt, tuple(res.coords(wt)) if wt >= 0 else ()))
        with self._lock:
            self._values[v] = a
        return a

    def product(self, u: Vector, i: int, v: Vector) -> Atom:
        """The VOA vector ``u_i v`` (window-checked)."""
        u, v = self.value(u), self.value(v)
        wt = u.weight + v.weight - i - 1
        if wt > self.voa.w_max:
            raise UnresolvableProduct(f"product of weight {wt} exceeds VOA window {self.voa.w_max}")
        key = (u, i, v)
        hit = self._products.get(key)
        if hit is not None:
            return hit
        if wt < 0:
            a = Atom(wt, ())
        else:
            res = act_vacuum_mode(self.voa, self.model_vector(u), i, self.model_vector(v), check=False)
            a = self.intern(Atom(wt, tuple(res.coords(wt))))
        with self._lock:
            self._products[key] = a
        return a

    def mode_column(self, space: GradedSpace, a: Atom, m: int, d: int, i: int) -> Dict[int, Scalar]:
        """Coordinates of ``a_m`` applied to basis vector ``i`` at depth ``d`` of ``space``."""
        key = (id(space), a, m, d, i)
        hit = self._columns.get(key)
        if hit is not None:
            return hit
        u = ModelVector(self.voa, {a.weight: {k: c for k, c in enumerate(a.coords) if c}})
        res = act_vacuum_mode(space, u, m, space.basis_vector(d, i), check=False)
        nd = d + a.weight - m - 1
        col = dict(res.parts.get(nd, {}))
        with self._lock:
            self._columns[key] = col
        return col

    def format_ops(self, ops: Sequence[ModeOp]) -> str:
        return " ".join(f"{self.label(op.vector)}[{op.index}]" for op in ops)

    def format_word(self, ops: Sequence[ModeOp], base: Optional[str]) -> str:
        ket = {VAC_BASE: "|0>", GEN_BASE: "|h>", None: ""}[base]
        body = self.format_ops(ops)
        return (body + " " + ket).strip()

    def format(self, expr: Expression) -> str:
        if not expr:
            return "0"
        parts = []
        for (ops, base), c in expr.items():
            parts.append(f"({scalar_str(c)}) {self.format_word(ops, base)}")
        return "\n".join(parts)


_STORES: Dict[int, VectorStore] = {}
_STORES_LOCK = threading.Lock()


def store_for(voa: VOAModel) -> VectorStore:
    with _STORES_LOCK:
        st = getattr(voa, "_vector_store", None)
        if st is None:
            st = VectorStore(voa)
            voa._vector_store = st
        return st


# -- evaluation ---------------------------------------------------------------

def apply_op(space: GradedSpace, op: ModeOp, v: ModelVector) -> ModelVector:
    store = store_for(space.voa)
    a = store.value(op.vector)
    if a.weight < 0 or a.is_zero:
        return space.zero()
    parts: Dict[int, Dict[int, Scalar]] = {}
    for d, vec in v.parts.items():
        nd = d + a.weight - op.index - 1
        if nd < 0:
            continue
        acc = parts.setdefault(nd, {})
        for i, ci in vec.items():
            for j, cj in store.mode_column(space, a, op.index, d, i).items():
                nv = acc.get(j, 0) + ci * cj
                if nv:
                    acc[j] = nv
                else:
                    acc.pop(j, None)
    return ModelVector(space, parts)


def evaluate_ops(space: GradedSpace, ops: Sequence[ModeOp], v: ModelVector) -> ModelVector:
    for op in reversed(ops):
        if v.is_zero:
            break
        v = apply_op(space, op, v)
    return v


def evaluate(expr: Expression, space: GradedSpace, target: Optional[ModelVector] = None) -> ModelVector:
    """Exact value of ``expr`` in ``space``.

    Words are applied to the generator of ``space`` (the vacuum for a VOA) or,
    for operator expressions, to ``target``.
    """
    total = space.zero()
    for (ops, base), c in expr.items():
        start = target if base is None else space.generator()
        if start is None:
            raise ValueError("operator expression needs a target vector")
        total = total + evaluate_ops(space, ops, start).scale(c)
    for d in total.parts:
        space.check_depth(d)
    return total


# -- word-level helpers ---------------------------------------------------------

def simplify_ops(ops: Sequence[ModeOp]) -> Optional[Tuple[Scalar, Ops]]:
    """Remove vacuum-multiple modes; ``None`` if the word is zero.

    ``(c 1)_n`` is ``c`` times the identity for ``n = -1`` and zero otherwise.
    """
    coeff = mpq(1)
    out = []
    for op in ops:
        v = op.vector
        if isinstance(v, Atom):
            if v.weight < 0 or v.is_zero:
                return None
            if v.weight == 0:
                if op.index != -1:
                    return None
                coeff *= v.coords[0]
                continue
        out.append(op)
    return coeff, tuple(out)


def _splice(ops: Ops, p: int, width: int, middle: Sequence[ModeOp]) -> Ops:
    return ops[:p] + tuple(middle) + ops[p + width:]


def _check_word(word) -> Tuple[Scalar, Ops, Optional[str]]:
    if isinstance(word, ModeWord):
        return word.coefficient, tuple(word.ops), word.base
    ops, base = word
    return mpq(1), tuple(ops), base


# -- Borcherds specializations --------------------------------------------------

def commutator_terms(store: VectorStore, u: Vector, a: int, v: Vector, b: int) -> List[Tuple[Scalar, ModeOp]]:
    """``[u_a, v_b] = sum_{i>=0} C(a, i) (u_i v)_{a+b-i}`` (finitely many i)."""
    out = []
    top = u.weight + v.weight - 1
    for i in range(0, top + 1):
        coef = binom(a, i)
        if not coef:
            continue
        prod = store.product(u, i, v)
        if prod.weight < 0 or prod.is_zero:
            continue
        out.append((mpq(coef), ModeOp(prod, a + b - i)))
    return out


def commutator_swap(word, p: int, store: VectorStore) -> Expression:
    """Transpose the modes at ``p, p+1`` and add the commutator corrections.

    ``... u_a v_b ... = ... v_b u_a ... + sum_i C(a, i) ... (u_i v)_{a+b-i} ...``
    Every correction has strictly smaller filtration level.
    """
    coeff, ops, base = _check_word(word)
    if not 0 <= p < len(ops) - 1:
        raise IndexError("no adjacent pair at this position")
    x, y = ops[p], ops[p + 1]
    terms: List[Tuple[WordKey, Scalar]] = [((_splice(ops, p, 2, (y, x)), base), coeff)]
    for c, op in commutator_terms(store, x.vector, x.index, y.vector, y.index):
        terms.append(((_splice(ops, p, 2, (op,)), base), coeff * c))
    return Expression(terms)


def iterate_terms(comp: Composite, index: int, depth: int) -> List[Tuple[Scalar, Ops]]:
    """Expand ``(a_{-r} b)_index`` acting on a vector of the given depth.

    Uses ``(a_{-r} b)_m = sum_i (-1)^i C(-r, i) [a_{-r-i} b_{m+i}
    - (-1)^r b_{m-r-i} a_i]``, keeping only terms that can be nonzero on
    vectors of depth ``depth``.
    """
    a, r, b = comp.left, comp.r, comp.right
    out: List[Tuple[Scalar, Ops]] = []
    # b_{m+i} must not push below depth 0
    top1 = depth + b.weight - index - 1
    for i in range(0, top1 + 1):
        coef = (-1) ** i * binom(-r, i)
        if coef:
            out.append((mpq(coef), (ModeOp(a, -r - i), ModeOp(b, index + i))))
    top2 = depth + a.weight - 1
    sign_r = -1 if r % 2 else 1
    for i in range(0, top2 + 1):
        coef = (-1) ** i * binom(-r, i) * sign_r
        if coef:
            out.append((mpq(-coef), (ModeOp(b, index - r - i), ModeOp(a, i))))
    return out


def iterate_expand(u: Composite, index: int, depth: int) -> Expression:
    """Operator expression for ``(a_{-r} b)_index`` on depth-``depth`` vectors."""
    return Expression(((ops, None), c) for c, ops in iterate_terms(u, index, depth))


def expand_composite_at(word, p: int) -> Expression:
    """Replace the composite mode at position ``p`` using the iterate formula."""
    coeff, ops, base = _check_word(word)
    op = ops[p]
    if not isinstance(op.vector, Composite):
        raise TypeError("mode at this position is not a composite")
    depths = suffix_depths(ops)
    if depths is None:
        return Expression()
    terms = []
    for c, mid in iterate_terms(op.vector, op.index, depths[p + 1]):
        terms.append(((_splice(ops, p, 1, mid), base), coeff * c))
    return Expression(terms)


def expand_all_composites(expr: Expression, base_depth: int = 0) -> Expression:
    """Expand composite modes until only atom modes remain.

    Operator expressions (base ``None``) are expanded for vectors of depth
    ``base_depth``; words with a base start at depth 0.
    """
    done: List[Tuple[WordKey, Scalar]] = []
    work = list(expr.items())
    while work:
        (ops, base), c = work.pop()
        bd = base_depth if base is None else 0
        depths = suffix_depths(ops, bd)
        if depths is None:
            continue
        p = next((j for j, op in enumerate(ops) if isinstance(op.vector, Composite)), None)
        if p is None:
            simp = simplify_ops(ops)
            if simp is not None:
                done.append(((simp[1], base), c * simp[0]))
            continue
        for cc, mid in iterate_terms(ops[p].vector, ops[p].index, depths[p + 1]):
            work.append(((_splice(ops, p, 1, mid), base), c * cc))
    return Expression(done)


def repeat_reduce(word, p: int, store: VectorStore) -> Expression:
    """Rewrite an equal negative pair ``u_{-n} v_{-n}`` at positions ``p, p+1``.

    ``u_{-n} v_{-n} = (u_{-1} v)_{1-2n} - sum_{i>=0, i!=n-1} u_{-1-i} v_{1-2n+i}
    - sum_{i>=0} v_{-2n-i} u_i``, the iterate formula at ``r = 1``.
    """
    coeff, ops, base = _check_word(word)
    if not 0 <= p < len(ops) - 1:
        raise IndexError("no adjacent pair at this position")
    x, y = ops[p], ops[p + 1]
    if x.index != y.index or x.index > -1:
        raise NotARepeat(f"modes {x.index}, {y.index} are not an equal negative pair")
    n = -x.index
    u, v = x.vector, y.vector
    depths = suffix_depths(ops)
    terms: List[Tuple[WordKey, Scalar]] = []
    comp = Composite(u, 1, v)
    terms.append(((_splice(ops, p, 2, (ModeOp(comp, 1 - 2 * n),)), base), coeff))
    if depths is not None:
        d = depths[p + 2]
        for i in range(0, d + v.weight + 2 * n - 1):
            if i == n - 1:
                continue
            mid = (ModeOp(u, -1 - i), ModeOp(v, 1 - 2 * n + i))
            terms.append(((_splice(ops, p, 2, mid), base), -coeff))
        for i in range(0, d + u.weight):
            mid = (ModeOp(v, -2 * n - i), ModeOp(u, i))
            terms.append(((_splice(ops, p, 2, mid), base), -coeff))
    return Expression(terms)


# -- index splits and the (-1)-mode product expansion -----------------------------

@dataclass(frozen=True)
class IndexSplit:
    """An ``i``-subset ``lambda`` of ``{1..n}`` (increasing) and its complement
    ``lambda_bar`` listed in decreasing order."""

    n: int
    i: int
    lam: Tuple[int, ...]
    lam_bar: Tuple[int, ...]


def lambda_splits(n: int, i: int) -> List[IndexSplit]:
    if not 0 <= i <= n:
        raise ValueError("need 0 <= i <= n")
    out = []
    for lam in itertools.combinations(range(1, n + 1), i):
        rest = tuple(sorted(set(range(1, n + 1)) - set(lam), reverse=True))
        out.append(IndexSplit(n, i, lam, rest))
    return out


@dataclass(frozen=True)
class MinusOneTerm:
    split: IndexSplit
    left_m: Tuple[int, ...]  # m for each element of lam, in lam order
    right_m: Tuple[int, ...]  # m for each element of lam_bar, in lam_bar order
    middle_index: Optional[int]  # the mode of v, or None when v is the vacuum
    ops: Ops
    z_exponent: int


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class MinusOneExpansion:
    """Vertex operator of ``x^1_{-1} ... x^n_{-1} v``.

    ``Y(x^1_{-1}...x^n_{-1} v, z)`` is the sum over ``0 <= i <= n``, splits
    ``lambda``, and ``m >= 0`` of
    ``prod_{lambda} x_{-1-m} z^m  Y(v, z)  prod_{lambda_bar} x_m z^{-1-m}``.
    :meth:`terms` lists the summands contributing to the mode ``p`` (the
    coefficient of ``z^{-p-1}``) that can be nonzero on vectors of a given
    depth.
    """

    def __init__(self, xs: Sequence[Atom], v: Atom = VACUUM):
        if len(xs) < 1:
            raise ValueError("need at least one vector")
        self.xs = tuple(xs)
        self.v = v
        self.n = len(xs)
        self.v_is_vacuum = v == VACUUM

    @property
    def composite(self) -> Vector:
        """The same vector as a nested composite ``x^1_{-1}(x^2_{-1}(...v))``."""
        out: Vector = self.v
        for x in reversed(self.xs):
            out = Composite(x, 1, out)
        return out

    @property
    def weight(self) -> int:
        return sum(x.weight for x in self.xs) + self.v.weight

    def terms(self, p: int, depth: int) -> Iterator[MinusOneTerm]:
        for i in range(self.n + 1):
            for split in lambda_splits(self.n, i):
                yield from self._split_terms(split, p, depth)

    def _right_choices(self, lam_bar: Tuple[int, ...], depth: int) -> Iterator[Tuple[Tuple[int, ...], int]]:
        # rightmost factor (last of lam_bar) acts first
        def rec(pos: int, d: int, acc: Tuple[int, ...]):
            if pos < 0:
                yield acc, d
                return
            x = self.xs[lam_bar[pos] - 1]
            for m in range(0, d + x.weight):
                yield from rec(pos - 1, d + x.weight - m - 1, (m,) + acc)

        yield from rec(len(lam_bar) - 1, depth, ())

    def _split_terms(self, split: IndexSplit, p: int, depth: int) -> Iterator[MinusOneTerm]:
        xs = self.xs
        for right_m, d_r in self._right_choices(split.lam_bar, depth):
            shift = sum(1 + m for m in right_m)
            if self.v_is_vacuum:
                total_left = -1 - p + shift
                totals = [total_left] if total_left >= 0 else []
            else:
                # s = p + M - shift must keep v_s from going below depth 0
                top = d_r + self.v.weight - 1 - p + shift
                totals = list(range(0, top + 1))
            if split.i == 0:
                totals = [t for t in totals if t == 0]
            for total_left in totals:
                for left_m in _compositions(total_left, split.i):
                    s = p + total_left - shift
                    left_ops = tuple(ModeOp(xs[j - 1], -1 - m) for j, m in zip(split.lam, left_m))
                    right_ops = tuple(ModeOp(xs[j - 1], m) for j, m in zip(split.lam_bar, right_m))
                    mid = () if self.v_is_vacuum else (ModeOp(self.v, s),)
                    zexp = sum(left_m) - shift - s - 1
                    yield MinusOneTerm(split, left_m, right_m, None if self.v_is_vacuum else s,
                                       left_ops + mid + right_ops, zexp)

    def coefficient(self, p: int, depth: int) -> Expression:
        """Operator expression for the mode ``p`` on vectors of the given depth."""
        return Expression(((t.ops, None), mpq(1)) for t in self.terms(p, depth))


def expand_minus_one_product(xs: Sequence[Atom], v: Atom = VACUUM) -> MinusOneExpansion:
    return MinusOneExpansion(xs, v)


def chain_composite(ops: Sequence[ModeOp], base: Vector = VACUUM) -> Vector:
    """The vector ``y1_{i1} ... yl_{il} base`` as a nested composite."""
    out: Vector = base
    for op in reversed(ops):
        out = Composite(op.vector, -op.index, out)
    return out


def residue_repeat_identity(xs: Sequence[Atom], m: int, rhs: Expression, depth: int,
                            store: Optional[VectorStore] = None) -> Expression:
    """Rewrite ``x^Q_m ... x^1_m`` (``Q = len(xs)``) on depth-``depth`` vectors.

    ``rhs`` must equal ``x^1_{-1} ... x^Q_{-1} |0>`` as a sum of shorter VOA
    words.  The mode ``p = Q(m+1) - 1`` of that vector is expanded twice: once
    from ``rhs`` through the iterate formula, and once through
    :class:`MinusOneExpansion`, whose only ``i = 0`` term with all indices equal
    to ``m`` is the product being rewritten.  The result is
    ``(rhs)_p - (all other MinusOneExpansion terms)``.
    """
    xs = tuple(xs)
    Q = len(xs)
    p = Q * (m + 1) - 1
    if store is not None:
        direct = evaluate(Expression.word([ModeOp(x, -1) for x in xs], VAC_BASE), store.voa)
        if evaluate(rhs, store.voa) != direct:
            raise BadRewrite("rhs does not evaluate to x^1_{-1} ... x^Q_{-1} |0>")
    pieces: List[Tuple[WordKey, Scalar]] = []
    for (ops, _), c in rhs.items():
        comp = chain_composite(ops)
        for key, cc in expand_all_composites(Expression.word([ModeOp(comp, p)], None), depth).items():
            pieces.append((key, c * cc))
    target_ops = tuple(ModeOp(x, m) for x in reversed(xs))
    for t in MinusOneExpansion(xs).terms(p, depth):
        if t.ops == target_ops:
            continue
        pieces.append(((t.ops, None), mpq(-1)))
    return Expression(pieces)


# -- Borcherds identity -------------------------------------------------------

def borcherds_residual(space: GradedSpace, u, v, k: int, q: int, r: int, target: ModelVector) -> ModelVector:
    """LHS minus RHS of Borcherds's identity applied to ``target``.

    ``sum_i C(-k, i) (u_{-r+i} v)_{-k-q-i}
      = sum_i (-1)^i C(-r, i) (u_{-k-r-i} v_{-q+i} - (-1)^r v_{-q-r-i} u_{-k+i})``
    """
    store = store_for(space.voa)
    if isinstance(u, ModelVector):
        u = store.atom(u)
    if isinstance(v, ModelVector):
        v = store.atom(v)
    total = space.zero()
    for d, vec in target.parts.items():
        t = ModelVector(space, {d: vec})
        lhs = space.zero()
        for i in range(0, u.weight + v.weight + r):
            coef = binom(-k, i)
            if not coef:
                continue
            prod = store.product(u, -r + i, v) if u.weight + v.weight + r - i - 1 <= store.voa.w_max else None
            if prod is None:
                raise OutOfWindow("product above the VOA window")
            if prod.weight < 0 or prod.is_zero:
                continue
            lhs = lhs + apply_op(space, ModeOp(prod, -k - q - i), t).scale(coef)
        rhs = space.zero()
        sign_r = -1 if r % 2 else 1
        for i in range(0, d + v.weight + q):
            coef = (-1) ** i * binom(-r, i)
            if coef:
                rhs = rhs + evaluate_ops(space, (ModeOp(u, -k - r - i), ModeOp(v, -q + i)), t).scale(coef)
        for i in range(0, d + u.weight + k):
            coef = (-1) ** i * binom(-r, i) * sign_r
            if coef:
                rhs = rhs - evaluate_ops(space, (ModeOp(v, -q - r - i), ModeOp(u, -k + i)), t).scale(coef)
        total = total + lhs - rhs
    return total


# -- text syntax ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[+-]?\d+(?:/\d+)?)\s*\*|(?P<sign>[+-])|(?P<ket>\|[0hw]>)|"
                    r"(?P<op>(?P<name>[A-Za-z]\w*(?:\([\d,\s]*\))?|1)\[(?P<idx>[+-]?\d+)\]))")


def parse_expression(text: str, store: VectorStore, names: Optional[Dict[str, Atom]] = None) -> Expression:
    """Parse the plain-text mode syntax.

    ``expr := term (('+' | '-') term)*``, ``term := [rational '*'] op* ket``,
    ``op := name '[' int ']'``, ``ket := '|0>' | '|h>' | '|w>'``.  Names: ``w``
    (the conformal vector, so ``w[n] = L(n-1)``), ``L`` (``L[n]`` is the
    Virasoro mode ``L(n) = w[n+1]``), ``1`` (vacuum), ``v(n1,...,nk)`` (the
    PBW vector ``L(-n1)...L(-nk)|0>``), plus any names passed in ``names`` or
    registered in the store (e.g. ``x0``).
    """
    names = dict(names or {})
    pos = 0
    terms: List[Tuple[WordKey, Scalar]] = []
    sign = mpq(1)
    coeff = mpq(1)
    ops: List[ModeOp] = []
    pending = False
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ValueError(f"cannot parse mode expression near {text[pos:pos + 20]!r}")
        pos = mt.end()
        if mt.group("num") is not None:
            coeff = mpq(mt.group("num"))
            pending = True
        elif mt.group("sign") is not None:
            if ops or pending:
                raise ValueError("sign inside a term")
            sign = -sign if mt.group("sign") == "-" else sign
        elif mt.group("op") is not None:
            name, idx = mt.group("name"), int(mt.group("idx"))
            ops.append(_resolve_op(name, idx, store, names))
            pending = True
        else:
            base = VAC_BASE if mt.group("ket") == "|0>" else GEN_BASE
            terms.append(((tuple(ops), base), sign * coeff))
            sign, coeff, ops, pending = mpq(1), mpq(1), [], False
    if pending or ops:
        raise ValueError("mode expression must end with a ket such as |0> or |h>")
    if not terms:
        raise ValueError("empty mode expression")
    return Expression(terms)


def _resolve_op(name: str, idx: int, store: VectorStore, names: Dict[str, Atom]) -> ModeOp:
    if name == "L":
        return ModeOp(store.omega, idx + 1)
    if name == "w":
        return ModeOp(store.omega, idx)
    if name == "1":
        return ModeOp(VACUUM, idx)
    if name in names:
        return ModeOp(names[name], idx)
    if name.startswith("v("):
        parts = [int(t) for t in name[2:-1].replace(" ", "").split(",") if t]
        if any(n < 2 for n in parts) or list(parts) != sorted(parts, reverse=True):
            raise ValueError(f"{name}: PBW parts must be nonincreasing and >= 2")
        return ModeOp(store.atom_of_word(parts), idx)
    got = store.lookup(name)
    if got is None:
        raise ValueError(f"unknown vector name {name!r}")
    return ModeOp(got, idx)
