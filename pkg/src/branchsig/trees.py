"""Decorated rooted trees, forests and tensor words over tree letters.

Trees are unordered: children are kept sorted by their serialized form so two
trees are equal iff their serializations agree. Grammar (no whitespace)::

    TREE   := LABEL | LABEL "(" TREE ("," TREE)* ")"
    FOREST := TREE ("*" TREE)* | ""
    WORD   := TREE ("|" TREE)*

Label 0 is the time letter when a path has been time-extended.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence


class ParseError(ValueError):
    def __init__(self, msg: str, text: str, offset: int):
        super().__init__(f"{msg} at byte {offset} in {text!r}")
        self.text = text
        self.offset = offset


class Tree:
    """Immutable decorated rooted tree in canonical form."""

    __slots__ = ("root", "children", "key", "size", "_hash")

    def __init__(self, root: int, children: Iterable["Tree"] = ()):
        root = int(root)
        if root < 0:
            raise ValueError(f"labels must be non-negative, got {root}")
        kids = tuple(sorted(children, key=_key))
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "children", kids)
        if kids:
            key = f"{root}(" + ",".join(c.key for c in kids) + ")"
        else:
            key = str(root)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "size", 1 + sum(c.size for c in kids))
        object.__setattr__(self, "_hash", hash(("T", key)))

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __eq__(self, other):
        return isinstance(other, Tree) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Tree"):
        return (self.size, self.key) < (other.size, other.key)

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Tree({self.key!r})"

    def __str__(self):
        return self.key

    def __reduce__(self):
        return (parse_tree, (self.key,))

    @property
    def branches(self) -> "Forest":
        """The forest left after removing the root."""
        return Forest(self.children)

    def labels(self) -> set[int]:
        out = {self.root}
        for c in self.children:
            out |= c.labels()
        return out


def _key(obj) -> str:
    return obj.key


class Forest:
    """Commutative monomial of trees; the empty forest is the unit 1."""

    __slots__ = ("trees", "key", "size", "_hash")

    def __init__(self, trees: Iterable[Tree] = ()):
        ts = tuple(sorted(trees, key=_key))
        object.__setattr__(self, "trees", ts)
        object.__setattr__(self, "key", "*".join(t.key for t in ts))
        object.__setattr__(self, "size", sum(t.size for t in ts))
        object.__setattr__(self, "_hash", hash(("F", self.key)))

    def __setattr__(self, name, value):
        raise AttributeError("Forest is immutable")

    def __eq__(self, other):
        return isinstance(other, Forest) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Forest"):
        return (self.size, self.key) < (other.size, other.key)

    def __mul__(self, other: "Forest") -> "Forest":
        if not other.trees:
            return self
        if not self.trees:
            return other
        return Forest(self.trees + other.trees)

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(self.trees)

    def __bool__(self):
        return bool(self.trees)

    def __repr__(self):
        return f"Forest({self.key!r})"

    def __str__(self):
        return self.key

    def __reduce__(self):
        return (parse_forest, (self.key,))

    @property
    def is_unit(self) -> bool:
        return not self.trees


class Word:
    """Tensor word whose letters are trees; length 0 is the empty word."""

    __slots__ = ("letters", "key", "degree", "_hash")

    def __init__(self, letters: Iterable[Tree] = ()):
        ls = tuple(letters)
        for t in ls:
            if not isinstance(t, Tree):
                raise TypeError(f"word letters must be trees, got {t!r}")
        object.__setattr__(self, "letters", ls)
        object.__setattr__(self, "key", "|".join(t.key for t in ls))
        object.__setattr__(self, "degree", sum(t.size for t in ls))
        object.__setattr__(self, "_hash", hash(("W", self.key)))

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    def __eq__(self, other):
        return isinstance(other, Word) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Word"):
        return (self.degree, self.key) < (other.degree, other.key)

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.letters[item])
        return self.letters[item]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __repr__(self):
        return f"Word({self.key!r})"

    def __str__(self):
        return self.key

    def __reduce__(self):
        return (parse_word, (self.key,))


EMPTY_FOREST = Forest()
EMPTY_WORD = Word()


def leaf(a: int) -> Tree:
    return Tree(a)


def graft(f: Forest | Iterable[Tree], r: int) -> Tree:
    """Attach the trees of ``f`` to a new root labelled ``r``."""
    trees = f.trees if isinstance(f, Forest) else tuple(f)
    return Tree(r, trees)


def forest(*trees: Tree) -> Forest:
    return Forest(trees)


def word(*letters: Tree | int) -> Word:
    return Word(leaf(x) if isinstance(x, int) else x for x in letters)


# -- enumeration ---------------------------------------------------------------

def _labels(d: int, offset: int, labels: Sequence[int] | None) -> tuple[int, ...]:
    if labels is not None:
        return tuple(sorted(set(int(a) for a in labels)))
    if d < 1:
        raise ValueError(f"alphabet size must be >= 1, got {d}")
    return tuple(range(offset, offset + d))


@lru_cache(maxsize=None)
def _trees_exact(n: int, labels: tuple[int, ...]) -> tuple[Tree, ...]:
    if n == 1:
        return tuple(sorted((Tree(a) for a in labels), key=_key))
    out = []
    for f in _forests_exact(n - 1, labels):
        for a in labels:
            out.append(Tree(a, f.trees))
    out.sort(key=_key)
    return tuple(out)


@lru_cache(maxsize=None)
def _forests_exact(n: int, labels: tuple[int, ...]) -> tuple[Forest, ...]:
    # multisets of trees with total size n: choose trees in non-decreasing
    # (size, key) order so each multiset is produced once
    if n == 0:
        return (EMPTY_FOREST,)
    pool = [t for k in range(1, n + 1) for t in _trees_exact(k, labels)]
    pool.sort()
    out: list[Forest] = []

    def rec(start: int, remaining: int, acc: list[Tree]):
        if remaining == 0:
            out.append(Forest(acc))
            return
        for i in range(start, len(pool)):
            t = pool[i]
            if t.size > remaining:
                continue
            acc.append(t)
            rec(i, remaining - t.size, acc)
            acc.pop()

    rec(0, n, [])
    out.sort(key=_key)
    return tuple(out)


def enumerate_trees(n: int, d: int = 1, offset: int = 0,
                    labels: Sequence[int] | None = None) -> list[Tree]:
    """All canonical trees with exactly ``n`` nodes, sorted by serialization.

    Labels are ``offset, ..., offset + d - 1`` unless ``labels`` is given.
    """
    if n <= 0:
        raise ValueError(f"tree size must be >= 1, got {n}")
    return list(_trees_exact(n, _labels(d, offset, labels)))


def enumerate_forests(n: int, d: int = 1, offset: int = 0,
                      labels: Sequence[int] | None = None) -> list[Forest]:
    """All forests with exactly ``n`` nodes (``n = 0`` gives the unit)."""
    if n < 0:
        raise ValueError(f"forest size must be >= 0, got {n}")
    return list(_forests_exact(n, _labels(d, offset, labels)))


def trees_up_to(n: int, d: int = 1, offset: int = 0,
                labels: Sequence[int] | None = None) -> list[Tree]:
    """Basis of trees with ``1 <= |t| <= n`` ordered by (size, serialization)."""
    return [t for k in range(1, n + 1) for t in enumerate_trees(k, d, offset, labels)]


def forests_up_to(n: int, d: int = 1, offset: int = 0,
                  labels: Sequence[int] | None = None,
                  include_unit: bool = False) -> list[Forest]:
    start = 0 if include_unit else 1
    return [f for k in range(start, n + 1) for f in enumerate_forests(k, d, offset, labels)]


# -- serialization -------------------------------------------------------------

def serialize(obj: Tree | Forest | Word) -> str:
    return obj.key


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def label(self) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            got = self.peek() or "end of input"
            raise ParseError(f"expected label, got {got!r}", self.text, start)
        return int(self.text[start:self.pos])

    def tree(self) -> Tree:
        root = self.label()
        if self.peek() != "(":
            return Tree(root)
        self.pos += 1
        kids = [self.tree()]
        while self.peek() == ",":
            self.pos += 1
            kids.append(self.tree())
        if self.peek() != ")":
            raise ParseError("expected ',' or ')'", self.text, self.pos)
        self.pos += 1
        return Tree(root, kids)

    def sequence(self, sep: str) -> list[Tree]:
        out = [self.tree()]
        while self.peek() == sep:
            self.pos += 1
            out.append(self.tree())
        return out

    def finish(self):
        if self.pos != len(self.text):
            raise ParseError(f"unexpected {self.peek()!r}", self.text, self.pos)


def parse_tree(s: str) -> Tree:
    p = _Parser(s)
    t = p.tree()
    p.finish()
    return t


def parse_forest(s: str) -> Forest:
    if s == "":
        return EMPTY_FOREST
    p = _Parser(s)
    ts = p.sequence("*")
    p.finish()
    return Forest(ts)


def parse_word(s: str) -> Word:
    if s == "":
        return EMPTY_WORD
    p = _Parser(s)
    ts = p.sequence("|")
    p.finish()
    return Word(ts)


def parse(s: str) -> Tree | Forest | Word:
    """Parse a tree, forest or word; the separator decides which."""
    if "|" in s:
        return parse_word(s)
    if "*" in s or s == "":
        return parse_forest(s)
    return parse_tree(s)
