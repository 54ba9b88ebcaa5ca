"""Truncated signatures of sampled paths and tree-indexed branched signatures.

Levels are stored densely: level ``m`` of a path with ``d`` channels is a flat
array of length ``d**m`` in row-major word order, so word ``(i1, ..., im)``
(channel positions) sits at ``i1*d**(m-1) + ... + im``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hopf import TensorSum
from .trees import Forest, Tree, Word, forests_up_to, leaf, trees_up_to


class PathError(ValueError):
    pass


class SampledPath:
    """Strictly increasing time grid with aligned channel values.

    ``labels`` names each channel: integers for ordinary paths (spatial
    channels 1..d, time 0) or trees for extended paths.
    """

    def __init__(self, times, values, labels: Sequence | None = None,
                 meta: dict | None = None):
        t = np.asarray(times, dtype=float).reshape(-1)
        x = np.asarray(values, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if t.size < 1:
            raise PathError("a path needs at least one sample")
        if x.ndim != 2 or x.shape[0] != t.size:
            raise PathError(f"values shape {x.shape} does not match {t.size} times")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            bad = int(np.argmin(np.diff(t) > 0)) + 1
            raise PathError(f"times must be strictly increasing (sample {bad})")
        if labels is None:
            labels = tuple(range(1, x.shape[1] + 1))
        labels = tuple(labels)
        if len(labels) != x.shape[1]:
            raise PathError(f"{len(labels)} labels for {x.shape[1]} channels")
        if len(set(labels)) != len(labels):
            raise PathError("channel labels must be distinct")
        self.times = t
        self.values = x
        self.labels = labels
        self.meta = dict(meta or {})

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def __len__(self):
        return self.times.size

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def channel(self, label) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def window(self, start: int, stop: int | None = None) -> "SampledPath":
        """Samples ``start..stop`` inclusive."""
        stop = self.steps if stop is None else stop
        return SampledPath(self.times[start:stop + 1], self.values[start:stop + 1],
                           self.labels, self.meta)

    def select(self, labels: Sequence) -> "SampledPath":
        idx = [self.labels.index(a) for a in labels]
        return SampledPath(self.times, self.values[:, idx], tuple(labels), self.meta)

    def time_extended(self) -> "SampledPath":
        """Prepend the time channel with label 0."""
        if 0 in self.labels:
            raise PathError("path already has a channel labelled 0")
        vals = np.column_stack([self.times, self.values])
        return SampledPath(self.times, vals, (0,) + self.labels, self.meta)

    def __repr__(self):
        return f"SampledPath(n={len(self)}, labels={self.labels})"


def time_extend(p: SampledPath) -> SampledPath:
    return p.time_extended()


def _check(p: SampledPath, level: int):
    if level < 1:
        raise PathError(f"signature level must be >= 1, got {level}")
    if len(p) < 2:
        raise PathError("signature needs at least two samples")


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise tensor product of (n, p) and (n, q) into (n, p*q)."""
    return np.einsum("ni,nj->nij", a, b).reshape(a.shape[0], -1)


def _letter_index(labels: Sequence) -> dict:
    return {a: i for i, a in enumerate(labels)}


def _resolve_letter(index: dict, letter) -> int:
    if letter in index:
        return index[letter]
    if isinstance(letter, Tree):
        if letter.size == 1 and letter.root in index:
            return index[letter.root]
        raise KeyError(f"no channel for tree {letter.key}")
    if isinstance(letter, (int, np.integer)) and leaf(int(letter)) in index:
        return index[leaf(int(letter))]
    raise KeyError(f"no channel for letter {letter!r}")


@dataclass
class TruncatedSignature:
    """Dense truncated signature; ``levels[0]`` is the constant 1."""

    level: int
    labels: tuple
    levels: list
    convention: str = "chen"
    dense: bool = True
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        self._index = _letter_index(self.labels)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def position(self, word) -> tuple[int, ...]:
        letters = word.letters if isinstance(word, Word) else tuple(word)
        return tuple(_resolve_letter(self._index, a) for a in letters)

    def __getitem__(self, word) -> float:
        pos = self.position(word)
        m = len(pos)
        if m > self.level:
            raise KeyError(f"word of length {m} exceeds level {self.level}")
        flat = 0
        for i in pos:
            flat = flat * self.dim + i
        return float(self.levels[m][flat])

    def words(self, m: int) -> Iterable[tuple]:
        d = self.dim
        for flat in range(d ** m):
            pos = []
            for _ in range(m):
                flat, r = divmod(flat, d)
                pos.append(r)
            yield tuple(self.labels[i] for i in reversed(pos))

    def entries(self) -> dict[str, float]:
        """Word string to value, including the empty word ``""``."""
        out = {"": 1.0}
        for m in range(1, self.level + 1):
            for w, v in zip(self.words(m), self.levels[m]):
                out[_word_key(w)] = float(v)
        return out


def _word_key(letters: Sequence) -> str:
    return "|".join(a.key if isinstance(a, Tree) else str(a) for a in letters)


def identity_signature(labels: Sequence, level: int) -> TruncatedSignature:
    d = len(labels)
    levels = [np.ones(1)] + [np.zeros(d ** m) for m in range(1, level + 1)]
    return TruncatedSignature(level, tuple(labels), levels)


def _segment_powers(dx: np.ndarray, level: int) -> list:
    """``dx^{(x)j} / j!`` per segment for j = 0..level."""
    n = dx.shape[0]
    out = [np.ones((n, 1))]
    for j in range(1, level + 1):
        out.append(_outer(out[-1], dx) / j)
    return out


def signature_stream(p: SampledPath, level: int, ito: bool = False,
                     keep_top: bool = True) -> list:
    """Prefix signatures ``Sig(p)_{t0, t_k}`` for every grid time ``k``.

    Returns a list indexed by level of arrays with shape ``(n+1, d**m)``. With
    ``keep_top=False`` the top level holds only its terminal value, shape
    ``(1, d**N)``, which avoids materialising the largest tensor per time.
    """
    _check(p, level)
    dx = p.increments()
    n = dx.shape[0]
    seg = None if ito else _segment_powers(dx, level)
    stream = [np.ones((n + 1, 1))]
    for m in range(1, level + 1):
        top = m == level and not keep_top
        if ito:
            prev = stream[m - 1][:-1]
            if top:
                stream.append(np.einsum("ni,nj->ij", prev, dx).reshape(1, -1))
                continue
            inc = _outer(prev, dx)
        else:
            if top:
                acc = np.zeros((1, p.dim ** m))
                for j in range(1, m + 1):
                    acc += np.einsum("ni,nj->ij", stream[m - j][:-1], seg[j]).reshape(1, -1)
                stream.append(acc)
                continue
            inc = _outer(stream[m - 1][:-1], seg[1])
            for j in range(2, m + 1):
                inc = inc + _outer(stream[m - j][:-1], seg[j])
        lev = np.zeros((n + 1, inc.shape[1]))
        np.cumsum(inc, axis=0, out=lev[1:])
        stream.append(lev)
    return stream


def _terminal(p: SampledPath, level: int, ito: bool) -> TruncatedSignature:
    stream = signature_stream(p, level, ito=ito, keep_top=False)
    levels = [s[-1].copy() for s in stream]
    return TruncatedSignature(level, p.labels, levels, "ito" if ito else "chen")


def sig_chen(p: SampledPath, level: int) -> TruncatedSignature:
    """Signature of the piecewise-linear interpolant, exact per segment."""
    return _terminal(p, level, ito=False)


def sig_ito(p: SampledPath, level: int) -> TruncatedSignature:
    """Iterated integrals by the left-point rule."""
    return _terminal(p, level, ito=True)


def chen_concat(a: TruncatedSignature, b: TruncatedSignature) -> TruncatedSignature:
    """Truncated tensor product of two signatures."""
    if a.level != b.level:
        raise ValueError(f"level mismatch: {a.level} vs {b.level}")
    if a.labels != b.labels:
        raise ValueError(f"alphabet mismatch: {a.labels} vs {b.labels}")
    levels = [np.ones(1)]
    for m in range(1, a.level + 1):
        acc = np.zeros(a.dim ** m)
        for i in range(m + 1):
            acc += np.outer(a.levels[i], b.levels[m - i]).reshape(-1)
        levels.append(acc)
    return TruncatedSignature(a.level, a.labels, levels, a.convention)


# -- sparse word streams -------------------------------------------------------

def word_stream(p: SampledPath, words: Iterable, ito: bool = False) -> dict:
    """Prefix iterated integrals of selected words at every grid time.

    ``words`` are sequences of channel labels (or ``Word`` objects whose tree
    letters name channels). Shared prefixes are computed once. The Chen variant
    is exact for the piecewise-linear interpolant, like ``sig_chen``.
    """
    if len(p) < 2:
        raise PathError("signature needs at least two samples")
    index = _letter_index(p.labels)
    dx = p.increments()
    n = dx.shape[0]
    memo: dict[tuple, np.ndarray] = {(): np.ones(n + 1)}

    def compute(pos: tuple) -> np.ndarray:
        hit = memo.get(pos)
        if hit is not None:
            return hit
        m = len(pos)
        if ito:
            inc = compute(pos[:-1])[:-1] * dx[:, pos[-1]]
        else:
            inc = np.zeros(n)
            tail = np.ones(n)
            for j in range(1, m + 1):
                tail = tail * dx[:, pos[m - j]] / j
                inc += compute(pos[:m - j])[:-1] * tail
        out = np.zeros(n + 1)
        np.cumsum(inc, out=out[1:])
        memo[pos] = out
        return out

    result = {}
    for w in words:
        letters = w.letters if isinstance(w, Word) else tuple(w)
        pos = tuple(_resolve_letter(index, a) for a in letters)
        result[w] = compute(pos)
    return result


def eval_pairing(sig: TruncatedSignature, s: Mapping, channel_map: Mapping | None = None) -> float:
    """``sum coeff * <sig, word>`` with tree letters mapped to channels."""
    total = 0.0
    for w, c in s.items():
        if not c:
            continue
        letters = w.letters if isinstance(w, Word) else tuple(w)
        if channel_map is not None:
            letters = tuple(_map_letter(channel_map, a) for a in letters)
        if len(letters) == 0:
            total += c
        else:
            total += c * sig[letters]
    return total


def _map_letter(channel_map: Mapping, a):
    try:
        return channel_map[a]
    except KeyError:
        name = a.key if isinstance(a, Tree) else repr(a)
        raise KeyError(f"no channel for tree {name}") from None


def pair_path(p: SampledPath, s: TensorSum, ito: bool = False,
              stream: bool = False):
    """Pair the signature of ``p`` with ``s`` without a dense signature."""
    words = [w for w, c in s.items() if c and len(w)]
    vals = word_stream(p, words, ito=ito)
    out = np.zeros(len(p))
    for w, c in s.items():
        if not c:
            continue
        out += c * (vals[w] if len(w) else 1.0)
    return out if stream else float(out[-1])


# -- branched signatures -------------------------------------------------------

@dataclass
class BranchedSignature:
    """Tree values of a branched signature; forests evaluate as products."""

    level: int
    labels: tuple
    values: dict

    def tree(self, t: Tree) -> float:
        try:
            return self.values[t]
        except KeyError:
            raise KeyError(f"no branched value for tree {t.key}") from None

    def __getitem__(self, f: Tree | Forest) -> float:
        if isinstance(f, Tree):
            return self.tree(f)
        if f.size > self.level:
            raise KeyError(f"forest {f.key!r} exceeds level {self.level}")
        out = 1.0
        for t in f.trees:
            out *= self.tree(t)
        return out

    def entries(self) -> dict[str, float]:
        out = {}
        for f in forests_up_to(self.level, labels=self.labels, include_unit=True):
            out[f.key] = self[f]
        return out


def branched_basis(labels: Sequence[int], level: int) -> list[Tree]:
    return trees_up_to(level, labels=labels)


def bsig_stream(p: SampledPath, level: int, trees: Iterable[Tree] | None = None) -> dict:
    """Prefix branched signature at every grid time, by the left-point rule.

    For ``t = [h1 ... hk]_r``: ``V_t(k+1) = V_t(k) + prod_i V_hi(k) * dx^r_k``.
    """
    _check(p, level)
    labels = p.labels
    if not all(isinstance(a, (int, np.integer)) for a in labels):
        raise PathError("branched signatures need integer channel labels")
    index = _letter_index(labels)
    dx = p.increments()
    n = dx.shape[0]
    basis = trees_up_to(level, labels=labels) if trees is None else sorted(set(trees))
    memo: dict[Tree, np.ndarray] = {}

    def compute(t: Tree) -> np.ndarray:
        hit = memo.get(t)
        if hit is not None:
            return hit
        if t.root not in index:
            raise KeyError(f"no channel for tree {t.key}")
        integrand = np.ones(n)
        for c in t.children:
            integrand = integrand * compute(c)[:-1]
        out = np.zeros(n + 1)
        np.cumsum(integrand * dx[:, index[t.root]], out=out[1:])
        memo[t] = out
        return out

    return {t: compute(t) for t in basis}


def bsig(p: SampledPath, level: int) -> BranchedSignature:
    stream = bsig_stream(p, level)
    return BranchedSignature(level, p.labels, {t: float(v[-1]) for t, v in stream.items()})


# -- diagnostics ---------------------------------------------------------------

def holder_ratio(p: SampledPath, alpha: float, level: int = 2, max_points: int = 64) -> dict:
    """Largest ``|<Sig_st, w>| / |t-s|^(alpha*|w|)`` per level over grid pairs.

    The grid is thinned to at most ``max_points`` samples. Reported only; a
    bounded ratio is consistent with the alpha-Hoelder hypothesis.
    """
    stride = max(1, int(np.ceil(len(p) / max_points)))
    idx = np.arange(0, len(p), stride)
    out = {m: 0.0 for m in range(1, level + 1)}
    for a in range(len(idx) - 1):
        sub = p.window(int(idx[a]))
        stream = signature_stream(sub, level)
        for b in range(a + 1, len(idx)):
            k = int(idx[b] - idx[a])
            dt = p.times[idx[b]] - p.times[idx[a]]
            for m in range(1, level + 1):
                val = np.max(np.abs(stream[m][k])) / dt ** (alpha * m)
                out[m] = max(out[m], float(val))
    return out
