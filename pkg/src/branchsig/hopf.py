"""Connes-Kreimer Hopf algebra on forests, the shuffle algebra on tree words,
and the Hairer-Kelly morphism between them.

Linear combinations are plain dicts mapping a basis element to an exact
integer coefficient; zero coefficients are never stored.

Coproduct convention: in ``f1 (x) f2`` the left factor is the pruned part and
the right factor is the trunk that keeps the root, so for a single tree every
right factor of the reduced coproduct is itself a tree.
"""
from __future__ import annotations

import threading
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Tuple

from .trees import EMPTY_FOREST, EMPTY_WORD, Forest, Tree, Word

HopfSum = Dict[Forest, int]
SplitSum = Dict[Tuple[Forest, Forest], int]
TensorSum = Dict[Word, int]
WordSplitSum = Dict[Tuple[Word, Word], int]


def add_term(acc: dict, key, coeff: int) -> None:
    if not coeff:
        return
    c = acc.get(key, 0) + coeff
    if c:
        acc[key] = c
    else:
        acc.pop(key, None)


def combine(*sums: Mapping, scale: Iterable[int] | None = None) -> dict:
    """Linear combination ``sum_i scale_i * sums_i``."""
    scales = list(scale) if scale is not None else [1] * len(sums)
    out: dict = {}
    for s, k in zip(sums, scales):
        for key, c in s.items():
            add_term(out, key, k * c)
    return out


def sorted_terms(s: Mapping) -> list:
    """Terms ordered by (degree, serialization) of the key."""
    def sort_key(item):
        key = item[0]
        if isinstance(key, tuple):
            return tuple((_deg(k), k.key) for k in key)
        return (_deg(key), key.key)
    return sorted(s.items(), key=sort_key)


def _deg(x) -> int:
    return x.degree if isinstance(x, Word) else x.size


def as_forest(x: Tree | Forest) -> Forest:
    return x if isinstance(x, Forest) else Forest((x,))


# -- Connes-Kreimer ------------------------------------------------------------

def counit(f: Forest) -> int:
    return 1 if f.is_unit else 0


def product(a: HopfSum, b: HopfSum) -> HopfSum:
    out: HopfSum = {}
    for fa, ca in a.items():
        for fb, cb in b.items():
            add_term(out, fa * fb, ca * cb)
    return out


def split_product(a: SplitSum, b: SplitSum) -> SplitSum:
    out: SplitSum = {}
    for (l1, r1), c1 in a.items():
        for (l2, r2), c2 in b.items():
            add_term(out, (l1 * l2, r1 * r2), c1 * c2)
    return out


@lru_cache(maxsize=None)
def _tree_coproduct(t: Tree) -> tuple:
    out: SplitSum = {(Forest((t,)), EMPTY_FOREST): 1}
    inner: SplitSum = {(EMPTY_FOREST, EMPTY_FOREST): 1}
    for child in t.children:
        inner = split_product(inner, dict(_tree_coproduct(child)))
    for (left, right), c in inner.items():
        add_term(out, (left, Forest((Tree(t.root, right.trees),))), c)
    return tuple(out.items())


def coproduct(f: Tree | Forest) -> SplitSum:
    """Delta f, multiplicative over the trees of ``f``."""
    f = as_forest(f)
    out: SplitSum = {(EMPTY_FOREST, EMPTY_FOREST): 1}
    for t in f.trees:
        out = split_product(out, dict(_tree_coproduct(t)))
    return out


def reduced_coproduct(f: Tree | Forest) -> SplitSum:
    """Delta' f = Delta f - f (x) 1 - 1 (x) f."""
    f = as_forest(f)
    if f.is_unit:
        raise ValueError("reduced coproduct is undefined on the unit forest")
    out = coproduct(f)
    add_term(out, (f, EMPTY_FOREST), -1)
    add_term(out, (EMPTY_FOREST, f), -1)
    return out


def coproduct_sum(s: HopfSum) -> SplitSum:
    out: SplitSum = {}
    for f, c in s.items():
        for k, v in coproduct(f).items():
            add_term(out, k, c * v)
    return out


@lru_cache(maxsize=None)
def _tree_antipode(t: Tree) -> tuple:
    f = Forest((t,))
    out: HopfSum = {f: -1}
    for (left, right), c in reduced_coproduct(f).items():
        for g, a in antipode(left).items():
            add_term(out, g * right, -c * a)
    return tuple(out.items())


def antipode(f: Tree | Forest) -> HopfSum:
    """Antipode; recursive on trees and multiplicative on forests."""
    f = as_forest(f)
    out: HopfSum = {EMPTY_FOREST: 1}
    for t in f.trees:
        out = product(out, dict(_tree_antipode(t)))
    return out


def apply_product(s: SplitSum) -> HopfSum:
    """P(a (x) b) = a b."""
    out: HopfSum = {}
    for (a, b), c in s.items():
        add_term(out, a * b, c)
    return out


# -- shuffle algebra on words --------------------------------------------------

@lru_cache(maxsize=None)
def _shuffle(u: Word, v: Word) -> tuple:
    if not u.letters:
        return ((v, 1),)
    if not v.letters:
        return ((u, 1),)
    out: TensorSum = {}
    last_u = Word(u.letters[-1:])
    last_v = Word(v.letters[-1:])
    for w, c in _shuffle(Word(u.letters[:-1]), v):
        add_term(out, w + last_u, c)
    for w, c in _shuffle(u, Word(v.letters[:-1])):
        add_term(out, w + last_v, c)
    return tuple(out.items())


def shuffle(u: Word, v: Word) -> TensorSum:
    return dict(_shuffle(u, v))


def shuffle_sums(a: TensorSum, b: TensorSum) -> TensorSum:
    out: TensorSum = {}
    for u, cu in a.items():
        for v, cv in b.items():
            for w, c in _shuffle(u, v):
                add_term(out, w, cu * cv * c)
    return out


def concat_sums(a: TensorSum, b: TensorSum) -> TensorSum:
    out: TensorSum = {}
    for u, cu in a.items():
        for v, cv in b.items():
            add_term(out, u + v, cu * cv)
    return out


def deconcatenate(w: Word) -> list[tuple[Word, Word]]:
    return [(Word(w.letters[:i]), Word(w.letters[i:])) for i in range(len(w.letters) + 1)]


def deconcatenate_sum(s: TensorSum) -> WordSplitSum:
    out: WordSplitSum = {}
    for w, c in s.items():
        for pair in deconcatenate(w):
            add_term(out, pair, c)
    return out


# -- Hairer-Kelly morphism -----------------------------------------------------

_psi_lock = threading.Lock()
_psi_cache: dict[Tree, tuple] = {}


def _psi_tree(t: Tree) -> TensorSum:
    hit = _psi_cache.get(t)
    if hit is not None:
        return dict(hit)
    out: TensorSum = {Word((t,)): 1}
    for (left, right), c in reduced_coproduct(t).items():
        if len(right.trees) != 1:
            raise AssertionError(f"right factor {right.key!r} of Delta'({t.key}) is not a tree")
        letter = Word(right.trees)
        for w, a in psi(left).items():
            add_term(out, w + letter, c * a)
    with _psi_lock:
        _psi_cache.setdefault(t, tuple(out.items()))
    return out


def psi(f: Tree | Forest) -> TensorSum:
    """Psi(h) = h + (Psi (x) Id) Delta' h on trees, shuffle-multiplicative on forests."""
    f = as_forest(f)
    out: TensorSum = {EMPTY_WORD: 1}
    for t in f.trees:
        out = shuffle_sums(out, _psi_tree(t))
    return out


def psi_sum(s: HopfSum) -> TensorSum:
    out: TensorSum = {}
    for f, c in s.items():
        for w, v in psi(f).items():
            add_term(out, w, c * v)
    return out


def psi_split(s: SplitSum) -> WordSplitSum:
    """(Psi (x) Psi) applied to a split sum."""
    out: WordSplitSum = {}
    for (a, b), c in s.items():
        pa, pb = psi(a), psi(b)
        for u, cu in pa.items():
            for v, cv in pb.items():
                add_term(out, (u, v), c * cu * cv)
    return out


def clear_caches() -> None:
    """Drop memoized coproducts, antipodes, shuffles and Psi images."""
    _tree_coproduct.cache_clear()
    _tree_antipode.cache_clear()
    _shuffle.cache_clear()
    with _psi_lock:
        _psi_cache.clear()
