"""Truncated Virasoro vertex operator algebras and their lowest-weight modules.

A graded space is described by a central charge ``c``, a lowest weight ``h``
and the smallest allowed PBW part (``2`` for the vacuum module, where
``L(-1)|0> = 0``, and ``1`` for modules).  Its depth-``d`` piece is spanned by
PBW words ``L(-n1)...L(-nk)w`` with ``n1 >= ... >= nk``, encoded as the tuple
``(n1, ..., nk)``.

Two engines act with ``L(k)``:

* :class:`VermaEngine` straightens words in the Verma module; it backs the
  ``Verma`` kind and :func:`gram_matrix`.
* the simple quotient of a :class:`GradedSpace` represents a depth-``d``
  vector through its images under ``L(1)`` and ``L(2)``.  In an irreducible
  lowest-weight module a positive-depth vector killed by both is zero, so this
  embedding is injective and gives the quotient by the radical of the
  contravariant form without ever forming a Verma-size Gram matrix.

Modes of vacuum vectors act through the iterate formula applied to
``L(-n)v = omega_{1-n} v`` recursively in the word length.

``w_max`` is the declared window.  Data for larger depths is produced on
demand and exactly, but public entry points raise :class:`OutOfWindow` when a
result would lie above ``w_max``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from gmpy2 import mpq
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Tuple

from .exactlinalg import (
    IncrementalBasis,
    Scalar,
    SparseMatrix,
    as_scalar,
    scalar_str,
    vec_iadd,
)

Word = Tuple[int, ...]
SVec = Dict[int, Scalar]

VERMA = "Verma"
SIMPLE = "SimpleQuotient"


class OutOfWindow(ValueError):
    """A result would leave the truncation window ``[0, w_max]``."""


def binom(n: int, k: int) -> int:
    """Generalized binomial coefficient ``n choose k`` for any integer ``n``."""
    if k < 0:
        return 0
    num = 1
    den = 1
    for t in range(k):
        num *= n - t
        den *= t + 1
    return num // den


@lru_cache(maxsize=None)
def pbw_words(d: int, min_part: int = 1, max_part: Optional[int] = None) -> Tuple[Word, ...]:
    """Nonincreasing part sequences of ``d`` with parts >= ``min_part``.

    Ordered lexicographically (ascending) on the part sequence.
    """
    if max_part is None:
        max_part = d
    if d == 0:
        return ((),)
    out = []
    for first in range(min(d, max_part), min_part - 1, -1):
        for rest in pbw_words(d - first, min_part, first):
            out.append((first,) + rest)
    return tuple(sorted(out))


def minimal_model_c(p: int, q: int) -> Scalar:
    """Central charge ``1 - 6 (p - q)^2 / (p q)`` of the ``(p, q)`` minimal model."""
    return 1 - mpq(6 * (p - q) ** 2, p * q)


LEE_YANG_C = minimal_model_c(2, 5)


class VermaEngine:
    """PBW straightening of ``L(k)`` on a Verma-type module.

    ``act(k, word)`` returns ``{word: coeff}``.  With ``min_part == 2`` this is
    the vacuum module where ``L(-1)`` kills the highest-weight vector.
    """

    def __init__(self, c: Scalar, h: Scalar, min_part: int):
        self.c = as_scalar(c)
        self.h = as_scalar(h)
        self.min_part = min_part
        self._cache: Dict[Tuple[int, Word], Dict[Word, Scalar]] = {}

    def act(self, k: int, word: Word) -> Dict[Word, Scalar]:
        key = (k, word)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = self._act(k, word)
        self._cache[key] = res
        return res

    def _act(self, k: int, word: Word) -> Dict[Word, Scalar]:
        if k > sum(word):
            return {}
        if not word:
            if k == 0:
                return {(): self.h} if self.h else {}
            if k < 0 and -k >= self.min_part:
                return {(-k,): mpq(1)}
            return {}
        n1, rest = word[0], word[1:]
        if k < 0 and -k >= n1:
            return {(-k,) + word: mpq(1)}
        out: Dict[Word, Scalar] = {}
        # L(k) L(-n1) R = L(-n1) L(k) R + (k + n1) L(k - n1) R + central
        for w2, c2 in self.act(k, rest).items():
            vec_iadd(out, self.act(-n1, w2), c2)
        if k + n1:
            vec_iadd(out, self.act(k - n1, rest), mpq(k + n1))
        if k == n1:
            central = self.c / 12 * (k ** 3 - k)
            if central:
                vec_iadd(out, {rest: mpq(1)}, central)
        return out

    def apply(self, k: int, vec: Dict[Word, Scalar]) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        for w, cw in vec.items():
            vec_iadd(out, self.act(k, w), cw)
        return out

    def pairing(self, u: Word, v: Word) -> Scalar:
        """Contravariant form ``<u, v>`` with ``<w, w> = 1``."""
        if sum(u) != sum(v):
            return mpq(0)
        vec = {v: mpq(1)}
        for a in u:
            vec = self.apply(a, vec)
            if not vec:
                return mpq(0)
        return vec.get((), mpq(0))


class GradedSpace:
    """Common machinery of :class:`VOAModel` and :class:`ModuleModel`."""

    def __init__(self, c, h, w_max: int, min_part: int, kind: str):
        if w_max < 0:
            raise ValueError("w_max must be nonnegative")
        if kind not in (VERMA, SIMPLE):
            raise ValueError(f"unknown kind {kind!r}")
        self.c = as_scalar(c)
        self.h = as_scalar(h)
        self.w_max = int(w_max)
        self.min_part = min_part
        self.kind = kind
        self.verma = VermaEngine(self.c, self.h, min_part)
        self._lock = threading.RLock()
        # simple-quotient data, filled depth by depth
        self._basis: Dict[int, List[Word]] = {0: [()]}
        self._emb_basis: Dict[int, IncrementalBasis] = {}
        self._word_coords: Dict[Word, SVec] = {(): {0: mpq(1)}}
        self._Lcache: Dict[Tuple[int, int, int], SVec] = {}
        self._mode_cache: Dict[Tuple[Word, int, int, int], SVec] = {}

    # -- bases -------------------------------------------------------------

    def pbw(self, d: int) -> Tuple[Word, ...]:
        """All PBW words at depth ``d`` (the Verma-type spanning set)."""
        if d < 0:
            return ()
        return pbw_words(d, self.min_part)

    def basis(self, d: int) -> List[Word]:
        """Ordered PBW words forming a basis of the depth-``d`` piece."""
        if d < 0:
            return []
        if self.kind == VERMA:
            return list(self.pbw(d))
        self._ensure(d)
        return self._basis[d]

    def dim(self, d: int) -> int:
        return len(self.basis(d))

    def graded_dims(self, up_to: Optional[int] = None) -> List[int]:
        top = self.w_max if up_to is None else up_to
        return [self.dim(d) for d in range(top + 1)]

    def word_coords(self, word: Word) -> SVec:
        """Coordinates of a PBW word over ``basis(sum(word))``."""
        word = tuple(word)
        if self.kind == VERMA:
            idx = self._verma_index(sum(word))
            return {idx[word]: mpq(1)}
        return dict(self._coords_of(word))

    @lru_cache(maxsize=None)
    def _verma_index(self, d: int) -> Dict[Word, int]:
        return {w: i for i, w in enumerate(self.pbw(d))}

    def _ensure(self, d: int) -> None:
        if d in self._basis:
            return
        with self._lock:
            for e in range(1, d + 1):
                if e not in self._basis:
                    self._build_depth(e)

    def _build_depth(self, d: int) -> None:
        # rank from the small spanning set {L(-n) b : b in basis(d - n)}
        probe = IncrementalBasis()
        for n in range(self.min_part, d + 1):
            for i in range(len(self._basis[d - n])):
                probe.add(self._emb_of_raise(-n, d - n, {i: mpq(1)}))
        target = probe.size
        # then the first PBW words (in basis order) reaching that rank
        ib = IncrementalBasis()
        kept: List[Word] = []
        self._emb_basis[d] = ib
        for word in self.pbw(d):
            if ib.size == target:
                break
            emb = self._word_emb(word)
            if ib.add(emb):
                kept.append(word)
        self._basis[d] = kept
        for j, word in enumerate(kept):
            self._word_coords[word] = {j: mpq(1)}

    def _word_emb(self, word: Word) -> Dict[Tuple[int, int], Scalar]:
        n1, rest = word[0], word[1:]
        return self._emb_of_raise(-n1, sum(rest), self._coords_of(rest))

    def _coords_of(self, word: Word) -> SVec:
        hit = self._word_coords.get(word)
        if hit is not None:
            return hit
        self._ensure(sum(word))
        hit = self._word_coords.get(word)
        if hit is None:
            hit = dict(self._emb_basis[sum(word)].coordinates(self._word_emb(word)))
            self._word_coords[word] = hit
        return hit

    def _emb_of_raise(self, k: int, d: int, x: SVec) -> Dict[Tuple[int, int], Scalar]:
        """Images under L(1), L(2) of ``L(k) x`` for ``k < 0``, ``x`` at depth d."""
        target = d - k
        out: Dict[Tuple[int, int], Scalar] = {}
        # L(1) L(k) x = L(k) L(1) x + (1 - k) L(1 + k) x
        if target - 1 >= 0:
            v1 = self._apply_L(k, d - 1, self._apply_L(1, d, x))
            vec_iadd(v1, self._apply_L(1 + k, d, x), mpq(1 - k))
            for i, c in v1.items():
                out[(1, i)] = c
        # L(2) L(k) x = L(k) L(2) x + (2 - k) L(2 + k) x + (c/2) delta_{k,-2} x
        if target - 2 >= 0:
            v2 = self._apply_L(k, d - 2, self._apply_L(2, d, x))
            vec_iadd(v2, self._apply_L(2 + k, d, x), mpq(2 - k))
            if k == -2:
                vec_iadd(v2, x, self.c / 2)
            for i, c in v2.items():
                out[(2, i)] = c
        return out

    # -- Virasoro action in basis coordinates ------------------------------

    def _apply_L(self, k: int, d: int, vec: SVec) -> SVec:
        if not vec or d - k < 0 or d < 0:
            return {}
        out: SVec = {}
        for i, ci in vec.items():
            vec_iadd(out, self._L_basis(k, d, i), ci)
        return out

    def _L_basis(self, k: int, d: int, i: int) -> SVec:
        key = (k, d, i)
        hit = self._Lcache.get(key)
        if hit is not None:
            return hit
        if self.kind == VERMA:
            res = self._L_basis_verma(k, d, i)
        else:
            res = self._L_basis_simple(k, d, i)
        self._Lcache[key] = res
        return res

    def _L_basis_verma(self, k: int, d: int, i: int) -> SVec:
        word = self.pbw(d)[i]
        idx = self._verma_index(d - k)
        return {idx[w]: c for w, c in self.verma.act(k, word).items()}

    def _L_basis_simple(self, k: int, d: int, i: int) -> SVec:
        if d - k < 0:
            return {}
        if k == 0:
            val = self.h + d
            return {i: val} if val else {}
        if k < 0:
            target = d - k
            self._ensure(target)
            emb = self._emb_of_raise(k, d, {i: mpq(1)})
            return dict(self._emb_basis[target].coordinates(emb))
        word = self.basis(d)[i]
        n1, rest = word[0], word[1:]
        y = self._coords_of(rest)
        dr = d - n1
        out: SVec = {}
        if dr - k >= 0:
            out = self._apply_L(-n1, dr - k, self._apply_L(k, dr, y))
        if k + n1:
            vec_iadd(out, self._apply_L(k - n1, dr, y), mpq(k + n1))
        if k == n1:
            central = self.c / 12 * (k ** 3 - k)
            if central:
                vec_iadd(out, y, central)
        return out

    # -- vacuum-vector modes ------------------------------------------------

    def _mode_word(self, u: Word, m: int, d: int, vec: SVec) -> SVec:
        """Mode ``m`` of the vacuum PBW word ``u`` applied to ``vec`` at depth d."""
        if not vec:
            return {}
        if d + sum(u) - m - 1 < 0:
            return {}
        out: SVec = {}
        for i, ci in vec.items():
            vec_iadd(out, self._mode_column(u, m, d, i), ci)
        return out

    def _mode_column(self, u: Word, m: int, d: int, i: int) -> SVec:
        key = (u, m, d, i)
        hit = self._mode_cache.get(key)
        if hit is not None:
            return hit
        res: SVec
        if not u:
            res = {i: mpq(1)} if m == -1 else {}
        else:
            res = {}
            n1, rest = u[0], u[1:]
            j = 1 - n1
            wr = sum(rest)
            e = {i: mpq(1)}
            sign_j = -1 if j % 2 else 1
            # omega_{j-s} rest_{m+s}
            for s in range(0, d + wr - m):
                coef = (-1) ** s * binom(j, s)
                if not coef:
                    continue
                inner = self._mode_word(rest, m + s, d, e)
                dd = d + wr - m - s - 1
                vec_iadd(res, self._apply_L(j - s - 1, dd, inner), mpq(coef))
            # - (-1)^j rest_{j+m-s} omega_s
            for s in range(0, d + 2):
                coef = (-1) ** s * binom(j, s) * sign_j
                if not coef:
                    continue
                inner = self._apply_L(s - 1, d, e)
                vec_iadd(res, self._mode_word(rest, j + m - s, d - s + 1, inner), mpq(-coef))
        self._mode_cache[key] = res
        return res

    # -- public helpers ----------------------------------------------------

    def check_depth(self, d: int) -> None:
        if d > self.w_max:
            raise OutOfWindow(f"depth {d} exceeds window w_max={self.w_max}")

    def vector(self, word) -> "ModelVector":
        word = tuple(word)
        return ModelVector(self, {sum(word): self.word_coords(word)})

    def basis_vector(self, d: int, i: int) -> "ModelVector":
        return ModelVector(self, {d: {i: mpq(1)}})

    def generator(self) -> "ModelVector":
        return ModelVector(self, {0: {0: mpq(1)}})

    def zero(self) -> "ModelVector":
        return ModelVector(self, {})

    def word_label(self, word: Word, ket: str) -> str:
        if not word:
            return ket
        return " ".join(f"L(-{n})" for n in word) + " " + ket

    def descriptor(self) -> dict:
        raise NotImplementedError


class VOAModel(GradedSpace):
    """Truncated Virasoro VOA; the vacuum module with ``L(-1)|0> = 0``."""

    is_voa = True

    def __init__(self, c, w_max: int, simple: bool = True):
        super().__init__(c, 0, w_max, 2, SIMPLE if simple else VERMA)

    @property
    def central_charge(self) -> Scalar:
        return self.c

    @property
    def voa(self) -> "VOAModel":
        return self

    @property
    def graded_basis(self) -> List[List[Word]]:
        return [self.basis(d) for d in range(self.w_max + 1)]

    def omega(self) -> "ModelVector":
        return self.vector((2,))

    def vacuum(self) -> "ModelVector":
        return self.generator()

    def descriptor(self) -> dict:
        return {
            "schema": "voaspan.model/1",
            "type": "voa",
            "central_charge": scalar_str(self.c),
            "kind": self.kind,
            "w_max": self.w_max,
            "graded_dims": self.graded_dims(),
            "basis": [[list(w) for w in self.basis(d)] for d in range(self.w_max + 1)],
        }

    def __repr__(self) -> str:
        return f"VOAModel(c={self.c}, w_max={self.w_max}, kind={self.kind})"


class ModuleModel(GradedSpace):
    """Lowest-weight module generated by ``w`` with ``L(0) w = h w``."""

    is_voa = False

    def __init__(self, voa: VOAModel, h, w_max: int, kind: str = SIMPLE):
        super().__init__(voa.c, h, w_max, 1, kind)
        self._voa = voa

    @property
    def voa(self) -> VOAModel:
        return self._voa

    @property
    def lowest_weight(self) -> Scalar:
        return self.h

    @property
    def graded_basis(self) -> List[List[Word]]:
        return [self.basis(d) for d in range(self.w_max + 1)]

    def descriptor(self) -> dict:
        return {
            "schema": "voaspan.model/1",
            "type": "module",
            "central_charge": scalar_str(self.c),
            "h": scalar_str(self.h),
            "kind": self.kind,
            "w_max": self.w_max,
            "graded_dims": self.graded_dims(),
            "basis": [[list(w) for w in self.basis(d)] for d in range(self.w_max + 1)],
        }

    def __repr__(self) -> str:
        return f"ModuleModel(c={self.c}, h={self.h}, w_max={self.w_max}, kind={self.kind})"


@dataclass(eq=False)
class ModelVector:
    """A vector of a graded model, stored as ``{depth: {basis index: coeff}}``.

    Homogeneous vectors have a single depth; graded sums may carry several.
    """

    space: GradedSpace
    parts: Dict[int, SVec] = field(default_factory=dict)

    def __post_init__(self):
        self.parts = {d: dict(v) for d, v in self.parts.items() if v}

    @property
    def is_zero(self) -> bool:
        return not self.parts

    @property
    def is_homogeneous(self) -> bool:
        return len(self.parts) <= 1

    @property
    def depth(self) -> Optional[int]:
        if not self.parts:
            return None
        if len(self.parts) > 1:
            raise ValueError("graded sum has no single depth")
        return next(iter(self.parts))

    def coords(self, d: Optional[int] = None) -> List[Scalar]:
        """Dense coordinates of the depth-``d`` component."""
        if d is None:
            d = self.depth if self.parts else 0
        v = self.parts.get(d, {})
        return [v.get(i, mpq(0)) for i in range(self.space.dim(d))]

    def __add__(self, other: "ModelVector") -> "ModelVector":
        return self.combine(other, mpq(1))

    def __sub__(self, other: "ModelVector") -> "ModelVector":
        return self.combine(other, mpq(-1))

    def __neg__(self) -> "ModelVector":
        return self.scale(-1)

    def __rmul__(self, s) -> "ModelVector":
        return self.scale(s)

    def scale(self, s) -> "ModelVector":
        s = as_scalar(s)
        return ModelVector(self.space, {d: {i: c * s for i, c in v.items()} for d, v in self.parts.items()} if s else {})

    def combine(self, other: "ModelVector", s: Scalar) -> "ModelVector":
        if other.space is not self.space:
            raise ValueError("vectors belong to different models")
        parts = {d: dict(v) for d, v in self.parts.items()}
        for d, v in other.parts.items():
            vec_iadd(parts.setdefault(d, {}), v, as_scalar(s))
        return ModelVector(self.space, parts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelVector):
            return NotImplemented
        return self.space is other.space and self.parts == other.parts

    def items(self) -> Iterator[Tuple[int, int, Scalar]]:
        for d in sorted(self.parts):
            for i in sorted(self.parts[d]):
                yield d, i, self.parts[d][i]

    def __repr__(self) -> str:
        if not self.parts:
            return "0"
        ket = "|0>" if getattr(self.space, "is_voa", False) else "|h>"
        terms = []
        for d, i, c in self.items():
            terms.append(f"({c})*[{self.space.word_label(self.space.basis(d)[i], ket)}]")
        return " + ".join(terms)


# -- operations -----------------------------------------------------------

def build_virasoro_voa(c, w_max: int, simple: bool = True) -> VOAModel:
    """Virasoro VOA of central charge ``c`` truncated at weight ``w_max``.

    With ``simple=True`` (the default) every graded piece is the quotient by
    the radical of the contravariant form, i.e. the simple VOA; otherwise the
    universal vacuum module.
    """
    if w_max < 2:
        raise ValueError("w_max must be at least 2")
    model = VOAModel(c, w_max, simple=simple)
    model.graded_dims()
    return model


def build_module(voa: VOAModel, h, w_max: int, kind: str = SIMPLE) -> ModuleModel:
    """Lowest-weight module of lowest weight ``h``, ``Verma`` or ``SimpleQuotient``."""
    model = ModuleModel(voa, h, w_max, kind)
    model.graded_dims()
    return model


def act_lie_mode(space: GradedSpace, k: int, v: ModelVector) -> ModelVector:
    """Exact action of ``L(k)`` on a (possibly graded-sum) vector."""
    if v.space is not space:
        raise ValueError("vector does not belong to this model")
    parts: Dict[int, SVec] = {}
    for d, vec in v.parts.items():
        if d - k < 0:
            continue
        space.check_depth(d - k)
        vec_iadd(parts.setdefault(d - k, {}), space._apply_L(k, d, vec))
    return ModelVector(space, parts)


def act_vacuum_mode(space: GradedSpace, u, m: int, v: ModelVector, check: bool = True) -> ModelVector:
    """Mode ``u_m`` of a VOA vector acting on ``v``.

    ``u`` is a homogeneous :class:`ModelVector` of the VOA or a PBW word.  The
    action goes through PBW representatives, so on a module of the simple VOA
    it does not depend on the representative chosen.
    """
    if isinstance(u, ModelVector):
        voa = u.space
        wt = u.depth
        if wt is None:
            return space.zero()
        combo = [(voa.basis(wt)[i], c) for i, c in u.parts[wt].items()]
    else:
        combo = [(tuple(u), mpq(1))]
        wt = sum(combo[0][0])
    parts: Dict[int, SVec] = {}
    for d, vec in v.parts.items():
        nd = d + wt - m - 1
        if nd < 0:
            continue
        if check:
            space.check_depth(nd)
        acc = parts.setdefault(nd, {})
        for word, c in combo:
            vec_iadd(acc, space._mode_word(word, m, d, vec), c)
    return ModelVector(space, parts)


def gram_matrix(space: GradedSpace, d: int) -> SparseMatrix:
    """Contravariant form on the full PBW spanning set at depth ``d``.

    Computed by straightening in the Verma-type module, independently of the
    quotient construction; ``L(n)`` is adjoint to ``L(-n)`` and ``<w, w> = 1``.
    """
    space.check_depth(d)
    words = space.pbw(d)
    n = len(words)
    entries = {}
    for i in range(n):
        for j in range(i, n):
            val = space.verma.pairing(words[i], words[j])
            if val:
                entries[(i, j)] = val
                entries[(j, i)] = val
    return SparseMatrix(n, n, entries)


def evaluate(expr, space: GradedSpace) -> ModelVector:
    """Evaluate a mode expression; see :func:`voaspan.modealg.evaluate`."""
    from .modealg import evaluate as _evaluate

    return _evaluate(expr, space)
