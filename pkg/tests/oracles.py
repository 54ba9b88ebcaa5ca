"""Independent reference computations used only by the tests.

None of these share code paths with the library beyond the Tree/Forest/Word
value types.
"""
from __future__ import annotations

import itertools
from math import comb

import numpy as np

from branchsig.trees import EMPTY_FOREST, Forest, Tree, Word


def rooted_tree_counts(n_max: int, d: int = 1) -> list[int]:
    """Counts of d-labelled rooted unordered trees with 1..n_max nodes (Euler transform)."""
    a = [0] * (n_max + 1)
    forests = [1] + [0] * n_max
    for n in range(1, n_max + 1):
        a[n] = d * forests[n - 1]
        # forests of total size n from trees counted so far
        c = [0] * (n + 1)
        for k in range(1, n + 1):
            c[k] = sum(e * a[e] for e in range(1, k + 1) if k % e == 0)
        forests[n] = sum(c[k] * forests[n - k] for k in range(1, n + 1)) // n
    return a[1:]


def graft_all(forests, labels) -> set:
    return {Tree(r, f.trees) for f in forests for r in labels}


# -- admissible cuts -----------------------------------------------------------

def _flatten(t: Tree):
    """Nodes as (label, parent) with parent -1 for the root."""
    nodes = []

    def rec(node, parent):
        idx = len(nodes)
        nodes.append((node.root, parent))
        for c in node.children:
            rec(c, idx)
    rec(t, -1)
    return nodes


def _build(nodes, keep: set, root: int, children: dict) -> Tree:
    return Tree(nodes[root][0], [_build(nodes, keep, c, children) for c in children[root] if c in keep])


def tree_cuts(t: Tree) -> list[tuple[Forest, Forest]]:
    """All admissible cuts plus the total cut, as (pruned, trunk) pairs."""
    nodes = _flatten(t)
    n = len(nodes)
    children = {i: [j for j in range(n) if nodes[j][1] == i] for i in range(n)}
    edges = list(range(1, n))  # edge identified by its child node

    def ancestors(i):
        out = []
        while nodes[i][1] != -1:
            i = nodes[i][1]
            out.append(i)
        return out

    def subtree(i):
        out = {i}
        for c in children[i]:
            out |= subtree(c)
        return out

    result = [(Forest((t,)), EMPTY_FOREST)]
    for r in range(len(edges) + 1):
        for cut in itertools.combinations(edges, r):
            cs = set(cut)
            if any(a in cs for c in cut for a in ancestors(c)):
                continue
            removed = set()
            pruned = []
            for c in cut:
                sub = subtree(c)
                removed |= sub
                pruned.append(_build(nodes, sub, c, children))
            keep = set(range(n)) - removed
            trunk = _build(nodes, keep, 0, children)
            result.append((Forest(pruned), Forest((trunk,))))
    return result


def cut_coproduct(f: Forest) -> dict:
    out: dict = {}
    options = [tree_cuts(t) for t in f.trees]
    for combo in itertools.product(*options):
        left = Forest([t for l, _ in combo for t in l.trees])
        right = Forest([t for _, r in combo for t in r.trees])
        out[(left, right)] = out.get((left, right), 0) + 1
    if not options:
        out[(EMPTY_FOREST, EMPTY_FOREST)] = 1
    return out


# -- shuffles ------------------------------------------------------------------

def interleavings(u: Word, v: Word) -> dict:
    """Shuffle by choosing positions of u's letters among |u|+|v| slots."""
    n, m = len(u), len(v)
    out: dict = {}
    for pos in itertools.combinations(range(n + m), n):
        letters = []
        iu = iv = 0
        ps = set(pos)
        for k in range(n + m):
            if k in ps:
                letters.append(u.letters[iu])
                iu += 1
            else:
                letters.append(v.letters[iv])
                iv += 1
        w = Word(letters)
        out[w] = out.get(w, 0) + 1
    assert sum(out.values()) == comb(n + m, n)
    return out


# -- quadrature ----------------------------------------------------------------

def nested_left_point(times, values, labels, tree: Tree) -> float:
    """Left-point nested integral of a tree over the full grid, scalar loops."""
    col = {a: i for i, a in enumerate(labels)}
    n = len(times) - 1

    def running(t: Tree) -> list[float]:
        kids = [running(c) for c in t.children]
        out = [0.0]
        acc = 0.0
        j = col[t.root]
        for k in range(n):
            integrand = 1.0
            for kv in kids:
                integrand *= kv[k]
            acc += integrand * (values[k + 1][j] - values[k][j])
            out.append(acc)
        return out

    return running(tree)[-1]


def linear_iterated_integral(slopes, word, T: float = 1.0) -> float:
    """Iterated integral of a word along x(t) = slopes * t on [0, T]."""
    prod = 1.0
    for a in word:
        prod *= slopes[a]
    m = len(word)
    return prod * T ** m / np.prod(np.arange(1, m + 1)) if m else 1.0


def normal_equations(X, y):
    A = np.column_stack([np.ones(len(y)), X])
    beta = np.linalg.solve(A.T @ A, A.T @ y)
    return beta[1:], beta[0]


def central_difference(fn, params: dict, key: str, index: tuple, h: float = 1e-5) -> float:
    p_plus = {k: v.copy() for k, v in params.items()}
    p_minus = {k: v.copy() for k, v in params.items()}
    p_plus[key][index] += h
    p_minus[key][index] -= h
    return (fn(p_plus) - fn(p_minus)) / (2 * h)
