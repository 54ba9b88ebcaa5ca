"""Driver simulation (BM, fBm, rough volatility) and explicit extended paths."""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hopf import psi
from .sigcore import SampledPath, bsig_stream, pair_path
from .trees import Tree, graft, leaf, trees_up_to

DH_TOLERANCE = 1e-10


class SimulationError(RuntimeError):
    pass


def make_rng(seed: int, *index: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, *index)``; independent streams per index."""
    key = [int(seed), *map(int, index)]
    if any(k < 0 for k in key):
        raise ValueError(f"seeds and stream indices must be non-negative, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def thread_count() -> int:
    raw = os.environ.get("BRANCHSIG_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"BRANCHSIG_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _parallel_map(fn, items: Sequence, threads: int | None = None) -> list:
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def uniform_grid(steps: int, horizon: float) -> np.ndarray:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    return np.linspace(0.0, horizon, steps + 1)


# -- Brownian motion -----------------------------------------------------------

def sample_bm(d: int, steps: int, horizon: float, seed: int, index: int = 0) -> SampledPath:
    """``d``-dimensional standard BM on a uniform grid with ``B_0 = 0``."""
    t = uniform_grid(steps, horizon)
    rng = make_rng(seed, index)
    dB = rng.standard_normal((steps, d)) * np.sqrt(horizon / steps)
    vals = np.zeros((steps + 1, d))
    np.cumsum(dB, axis=0, out=vals[1:])
    return SampledPath(t, vals, meta={"driver": "bm", "seed": seed, "index": index})


def sample_bm_batch(d: int, steps: int, horizon: float, seed: int, n_paths: int) -> np.ndarray:
    """Values of ``n_paths`` BM samples, shape ``(n_paths, steps+1, d)``; path i uses stream i."""
    paths = _parallel_map(lambda i: sample_bm(d, steps, horizon, seed, i).values, range(n_paths))
    return np.stack(paths)


# -- fractional Brownian motion ------------------------------------------------

@dataclass
class FbmSpec:
    hurst: float
    horizon: float = 1.0
    steps: int = 1000
    correlation: np.ndarray | None = None
    dim: int = 1

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.correlation is None:
            self.correlation = np.eye(self.dim)
        rho = np.atleast_2d(np.asarray(self.correlation, dtype=float))
        if rho.shape[0] != rho.shape[1]:
            raise ValueError(f"correlation must be square, got {rho.shape}")
        if not np.allclose(rho, rho.T, atol=1e-12):
            raise ValueError("correlation must be symmetric")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("correlation must be positive semidefinite")
        self.correlation = rho
        self.dim = rho.shape[0]


def fgn_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    """Unit-step fractional Gaussian noise autocovariance at integer lags."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)


def fbm_covariance(hurst: float, s, t):
    s, t = np.asarray(s, float), np.asarray(t, float)
    h2 = 2.0 * hurst
    return 0.5 * (s ** h2 + t ** h2 - np.abs(t - s) ** h2)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    return v * np.sqrt(np.clip(w, 0.0, None))


class _FgnSampler:
    """Unit-step fGn sampler: circulant embedding with a dense fallback."""

    def __init__(self, hurst: float, n: int, tol: float = DH_TOLERANCE):
        self.n = n
        gam = fgn_autocovariance(hurst, np.arange(n + 1))
        circ = np.concatenate([gam, gam[-2:0:-1]])
        lam = np.fft.fft(circ).real
        self.fallback = bool(lam.min() < -tol)
        if self.fallback:
            idx = np.arange(n)
            cov = fgn_autocovariance(hurst, idx[:, None] - idx[None, :])
            self.factor = _psd_sqrt(cov)
        else:
            self.scale = np.sqrt(np.clip(lam, 0.0, None) / circ.size)

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` independent sequences, shape ``(count, n)``."""
        if self.fallback:
            z = rng.standard_normal((count, self.n))
            return z @ self.factor.T
        m = self.scale.size
        z = rng.standard_normal((count, 2, m))
        w = self.scale * (z[:, 0] + 1j * z[:, 1])
        return np.fft.fft(w, axis=-1).real[:, :self.n]


def sample_fbm(spec: FbmSpec, seed: int, index: int = 0, *,
               sampler: _FgnSampler | None = None) -> SampledPath:
    """fBm via Davies-Harte; components correlated through a square root of rho."""
    n = spec.steps
    t = uniform_grid(n, spec.horizon)
    sampler = sampler or _FgnSampler(spec.hurst, n)
    rng = make_rng(seed, index)
    fgn = sampler.draw(rng, spec.dim).T * (spec.horizon / n) ** spec.hurst
    vals = np.zeros((n + 1, spec.dim))
    np.cumsum(fgn, axis=0, out=vals[1:])
    vals = vals @ _psd_sqrt(spec.correlation).T
    meta = {"driver": "fbm", "hurst": spec.hurst, "seed": seed, "index": index,
            "embedding_fallback": sampler.fallback}
    if sampler.fallback:
        warnings.warn("circulant embedding not nonnegative; used dense covariance factor")
    return SampledPath(t, vals, meta=meta)


def sample_fbm_batch(spec: FbmSpec, seed: int, n_paths: int) -> np.ndarray:
    """Values of ``n_paths`` fBm samples, shape ``(n_paths, steps+1, dim)``."""
    sampler = _FgnSampler(spec.hurst, spec.steps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        paths = _parallel_map(lambda i: sample_fbm(spec, seed, i, sampler=sampler).values,
                              range(n_paths))
    return np.stack(paths)


# -- rough volatility ----------------------------------------------------------

@dataclass
class RoughVolParams:
    a: float = 0.1
    b: float = 3.0
    lambda1: float = 1e-4
    lambda2: float = 3.0
    s0: float = 1.0
    v0: float = 0.8
    hurst: float = 0.1
    steps: int = 1000
    horizon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be non-negative, got {self.horizon}")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")


@dataclass
class RoughVolResult:
    S: SampledPath
    V: SampledPath
    drivers: SampledPath
    clamp_events: int = 0
    meta: dict = field(default_factory=dict)


def roughvol_coefficients(p: RoughVolParams, S: float, V: float):
    """Drift and diffusion terms ``(f1, g1, f2, g2, h)`` at state ``(S, V)``."""
    a, b, l1, l2 = p.a, p.b, p.lambda1, p.lambda2
    vb = max(V, 0.0) ** b
    q = a * (V - a) ** 2 + a
    f1 = S * (-0.5 * l1 * (a * a * (V - a) * vb / np.sqrt(q) + q))
    g1 = S * l2 * q
    f2 = l1 * a * (1.0 + V)
    g2 = l2 * a * vb
    h = l2 * a * p.v0 ** b
    return f1, g1, f2, g2, h


def simulate_roughvol(p: RoughVolParams) -> RoughVolResult:
    """Euler-Maruyama for the rough-volatility pair driven by ``(t, B, B^H)``.

    ``B`` uses stream ``(seed, 0)`` and ``B^H`` stream ``(seed, 1)``. V is
    clamped at 0 only inside ``V**b``; each clamp is counted.
    """
    n = p.steps
    if p.horizon == 0:
        t = np.zeros(1)
        drivers = SampledPath(t, np.zeros((1, 3)), labels=(0, 1, 2))
        return RoughVolResult(SampledPath(t, [p.s0]), SampledPath(t, [p.v0]), drivers)
    t = uniform_grid(n, p.horizon)
    dt = p.horizon / n
    B = sample_bm(1, n, p.horizon, p.seed, 0).values[:, 0]
    BH = sample_fbm(FbmSpec(p.hurst, p.horizon, n), p.seed, 1).values[:, 0]
    dB, dBH = np.diff(B), np.diff(BH)
    S = np.empty(n + 1)
    V = np.empty(n + 1)
    S[0], V[0] = p.s0, p.v0
    clamps = 0
    with np.errstate(over="raise", invalid="raise"):
        for k in range(n):
            if V[k] < 0:
                clamps += 1
            try:
                f1, g1, f2, g2, h = roughvol_coefficients(p, S[k], V[k])
                S[k + 1] = S[k] + f1 * dt + g1 * dB[k]
                V[k + 1] = V[k] + f2 * dt + g2 * dB[k] + h * dBH[k]
            except FloatingPointError as exc:
                raise SimulationError(f"overflow at Euler step {k}: {exc}") from None
            if not (np.isfinite(S[k + 1]) and np.isfinite(V[k + 1])):
                raise SimulationError(f"non-finite state at Euler step {k}")
    drivers = SampledPath(t, np.column_stack([t, B, BH]), labels=(0, 1, 2),
                          meta={"seed": p.seed, "hurst": p.hurst})
    return RoughVolResult(SampledPath(t, S), SampledPath(t, V), drivers, clamps,
                          {"clamp_events": clamps})


# -- extended paths ------------------------------------------------------------

@dataclass
class ExtendedPath:
    """Path whose channels are indexed by trees; leaf channels copy the base."""

    base: SampledPath
    path: SampledPath
    level: int
    meta: dict = field(default_factory=dict)

    @property
    def channel_index(self) -> dict:
        return {t: i for i, t in enumerate(self.path.labels)}

    def channel(self, t: Tree) -> np.ndarray:
        return self.path.channel(t)


def _assemble(base: SampledPath, channels: dict, level: int, meta: dict) -> ExtendedPath:
    trees = sorted(channels)
    vals = np.column_stack([channels[t] for t in trees])
    path = SampledPath(base.times, vals, labels=tuple(trees), meta=meta)
    return ExtendedPath(base, path, level, meta)


def _leaf_channels(p: SampledPath) -> dict:
    return {leaf(a): p.values[:, i] for i, a in enumerate(p.labels)}


def _cumulative(inc: np.ndarray) -> np.ndarray:
    out = np.zeros(inc.size + 1)
    np.cumsum(inc, out=out[1:])
    return out


def extend_bm(p: SampledPath, covariation: str = "realized",
              correlation: np.ndarray | None = None) -> ExtendedPath:
    """Level-2 extension of a BM sample.

    ``[a]_b`` carries minus one half of the covariation of channels a and b:
    the realized sum of increment products, or its expectation
    ``rho_ab (t - t0)`` when ``covariation="expected"``.
    """
    if covariation not in ("realized", "expected"):
        raise ValueError(f"covariation must be 'realized' or 'expected', got {covariation!r}")
    dx = p.increments()
    d = p.dim
    rho = np.eye(d) if correlation is None else np.asarray(correlation, float)
    channels = _leaf_channels(p)
    elapsed = p.times - p.times[0]
    for i, a in enumerate(p.labels):
        for j, b in enumerate(p.labels):
            if covariation == "realized":
                cov = _cumulative(dx[:, i] * dx[:, j])
            else:
                cov = rho[i, j] * elapsed
            channels[graft([leaf(a)], b)] = -0.5 * cov
    return _assemble(p, channels, 2, {"driver": "bm", "covariation": covariation})


def extend_fbm(p: SampledPath, spec: FbmSpec) -> ExtendedPath:
    """Level-3 fBm extension with the covariance-driven correction channels.

    The window starts at ``s = t0`` so channels are additive over adjacent
    windows. Integrals against ``r^(2H-1)`` use left-point sums; the singular
    weight at ``r = 0`` is replaced by 0.
    """
    H = spec.hurst
    if p.dim != spec.dim:
        raise ValueError(f"spec has {spec.dim} components but path has {p.dim}")
    if not 0.25 < H <= 1.0 / 3.0:
        warnings.warn(f"hurst {H} lies outside (1/4, 1/3]; extension is reported, not guaranteed")
    rho = spec.correlation
    t = p.times
    s = t[0]
    channels = _leaf_channels(p)
    labels = p.labels
    idx = {a: i for i, a in enumerate(labels)}
    level2 = t ** (2 * H) - s ** (2 * H)
    for a in labels:
        for b in labels:
            channels[graft([leaf(a)], b)] = -0.5 * rho[idx[a], idx[b]] * level2
    # weighted integrals  int_s^t B^a_r r^(2H-1) dr, left-point rule
    with np.errstate(divide="ignore"):
        weight = np.where(t[:-1] > 0, t[:-1] ** (2 * H - 1), 0.0)
    dt = np.diff(t)
    weighted = {a: _cumulative(p.values[:-1, idx[a]] * weight * dt) for a in labels}
    for a in labels:
        for b in labels:
            for c in labels:
                chain = graft([graft([leaf(a)], b)], c)
                channels[chain] = -H * rho[idx[a], idx[c]] * weighted[b]
                cherry = graft([leaf(a), leaf(b)], c)
                if cherry not in channels:
                    channels[cherry] = (-H * rho[idx[b], idx[c]] * weighted[a]
                                        - H * rho[idx[a], idx[c]] * weighted[b])
    return _assemble(p, channels, 3, {"driver": "fbm", "hurst": H})


def extend_exact(p: SampledPath, level: int) -> ExtendedPath:
    """Extension whose pairing identity holds exactly for the discrete data.

    Channels are built degree by degree: the channel of tree ``h`` is the
    left-point branched value of ``h`` minus the Chen pairing of the already
    built lower channels with ``Psi(h) - h``.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    branched = bsig_stream(p, level)
    channels = _leaf_channels(p)
    for m in range(2, level + 1):
        lower = _assemble(p, channels, m - 1, {}).path
        for h in trees_up_to(m, labels=p.labels):
            if h.size != m:
                continue
            s = psi(h)
            rest = {w: c for w, c in s.items() if not (len(w) == 1 and w.letters[0] == h)}
            correction = pair_path(lower, rest, stream=True)
            channels[h] = branched[h] - correction
    return _assemble(p, channels, level, {"driver": "exact"})


def hk_residual(p: SampledPath, ext: ExtendedPath, level: int) -> dict:
    """Per-tree residual ``<BSig(p), h> - <Sig(ext), Psi(h)>`` over the full window."""
    branched = bsig_stream(p, level)
    out = {}
    for h in trees_up_to(level, labels=p.labels):
        s = psi(h)
        out[h] = float(branched[h][-1]) - pair_path(ext.path, s)
    return out


def hk_residual_stream(p: SampledPath, ext: ExtendedPath, trees: Sequence[Tree]) -> dict:
    """Residual at every grid time for the given trees."""
    level = max(t.size for t in trees)
    branched = bsig_stream(p, level, trees)
    return {h: branched[h] - pair_path(ext.path, psi(h), stream=True) for h in trees}


def realized_covariation(p: SampledPath) -> np.ndarray:
    dx = p.increments()
    return dx.T @ dx

