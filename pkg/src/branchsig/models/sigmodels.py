"""Linear signature models, iterated composition and regression helpers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..hopf import shuffle as shuffle_words
from ..sigcore import SampledPath, bsig_stream, signature_stream, word_stream
from ..trees import Forest, Tree, Word


@dataclass
class SigModelCoeffs:
    """Coefficients of ``l_0 + sum_k l_k <Sig, k>``.

    Keys are words (``Word`` or label tuples) for classical models, forests or
    trees for branched models.
    """

    level: int
    intercept: float = 0.0
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.weights:
            deg = _degree(key)
            if not 1 <= deg <= self.level:
                raise ValueError(f"key {key!r} has degree {deg}, outside [1, {self.level}]")


def _degree(key) -> int:
    if isinstance(key, Word):
        return key.degree
    if isinstance(key, (Tree, Forest)):
        return key.size
    return len(tuple(key))


def sig_model_eval(c: SigModelCoeffs, p: SampledPath, ito: bool = False) -> SampledPath:
    """Model value on every prefix window ``[t0, t_k]``."""
    streams = word_stream(p, list(c.weights), ito=ito)
    out = np.full(len(p), float(c.intercept))
    for key, w in c.weights.items():
        out += w * streams[key]
    return SampledPath(p.times, out)


def bsig_model_eval(c: SigModelCoeffs, p: SampledPath) -> SampledPath:
    """Branched model on every prefix window, forests valued as tree products."""
    trees = set()
    for key in c.weights:
        trees.update([key] if isinstance(key, Tree) else key.trees)
    streams = bsig_stream(p, c.level, trees) if trees else {}
    out = np.full(len(p), float(c.intercept))
    for key, w in c.weights.items():
        if isinstance(key, Tree):
            val = streams[key]
        else:
            val = np.ones(len(p))
            for t in key.trees:
                val = val * streams[t]
        out += w * val
    return SampledPath(p.times, out)


def iterate_sig_model(layers: Sequence[SigModelCoeffs], p: SampledPath,
                      branched: bool = False, augment: bool = False) -> SampledPath:
    """Apply ``layers`` in turn, each to the previous layer's output path.

    With ``augment`` every layer after the first sees the original channels
    together with the previous output, which is labelled one past the largest
    original label.
    """
    if not layers:
        raise ValueError("iterate_sig_model needs at least one layer")
    model = bsig_model_eval if branched else sig_model_eval
    phi = model(layers[0], p)
    for c in layers[1:]:
        if augment:
            label = max(p.labels) + 1
            inp = SampledPath(p.times, np.column_stack([p.values, phi.values]),
                              labels=p.labels + (label,))
        else:
            inp = phi
        phi = model(c, inp)
    return phi


def shuffle_residual(p: SampledPath) -> np.ndarray:
    """Mean over the grid of the squared integration-by-parts defect per channel pair.

    ``R_jk = mean_i [D_j D_k - int D_j dX_k - int D_k dX_j]^2`` where
    ``D = X - X(t0)`` and the integrals are left-point sums from ``t0``.
    """
    x = p.values
    D = x - x[0]
    dx = np.diff(x, axis=0)
    n, m = dx.shape
    integ = np.zeros((n + 1, m, m))
    np.cumsum(D[:-1, :, None] * dx[:, None, :], axis=0, out=integ[1:])
    defect = D[:, :, None] * D[:, None, :] - integ - integ.transpose(0, 2, 1)
    return (defect ** 2).mean(axis=0)


def ito_features(p: SampledPath, level: int = 2) -> np.ndarray:
    """Left-point prefix signature levels 1..level, one row per grid time."""
    stream = signature_stream(p, level, ito=True)
    return np.concatenate(stream[1:], axis=1)


@dataclass
class LinearFit:
    coefficients: np.ndarray
    intercept: float
    mse: float
    ridge: bool = False
    rank: int = 0

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(features) @ self.coefficients


def fit_linear(features, target, damping: float = 1e-10) -> LinearFit:
    """Least squares with intercept; columns are standardised before solving.

    A rank-deficient system falls back to ridge with relative ``damping`` and
    sets ``ridge=True``.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(target, dtype=float).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if n != y.size:
        raise ValueError(f"{n} feature rows but {y.size} targets")
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} rows for {k} features, got {n}")
    mu = X.mean(axis=0)
    scale = X.std(axis=0)
    live = scale > 0
    Z = (X[:, live] - mu[live]) / scale[live]
    ybar = y.mean()
    sol, _, rank, sv = np.linalg.lstsq(Z, y - ybar, rcond=None)
    ridge = rank < Z.shape[1]
    if ridge:
        gram = Z.T @ Z
        lam = damping * max(np.trace(gram) / max(Z.shape[1], 1), 1.0)
        sol = np.linalg.solve(gram + lam * np.eye(Z.shape[1]), Z.T @ (y - ybar))
    coef = np.zeros(k)
    coef[live] = sol / scale[live]
    intercept = float(ybar - mu @ coef)
    resid = y - intercept - X @ coef
    return LinearFit(coef, intercept, float(np.mean(resid ** 2)), bool(ridge), int(rank))


def shuffle_power(key_weights: Mapping, m: int) -> dict:
    """``(sum_w l_w w)^{shuffle m}`` as a word-keyed dict of float coefficients."""
    out = {Word(): 1.0}
    for _ in range(m):
        nxt: dict = {}
        for u, cu in out.items():
            for v, cv in key_weights.items():
                for w, c in shuffle_words(u, v).items():
                    nxt[w] = nxt.get(w, 0.0) + cu * cv * c
        out = nxt
    return out
