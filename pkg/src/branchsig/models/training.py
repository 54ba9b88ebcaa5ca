"""Learned path extension trained with a physics loss and a shuffle loss.

Pipeline per grid time ``t_i``: MLP(X(t_i)) gives ``m`` extension channels;
the depth-2 left-point prefix signature of (X, extension) feeds a linear head
producing ``X_hat``; the depth-2 prefix signature of (X, X_hat) feeds a second
linear head producing ``V_hat``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..extend import make_rng
from ..sigcore import SampledPath
from . import tape
from .tape import Var

DESK_WIDTHS = (64, 32, 16)
FULL_WIDTHS = (512, 256, 128, 64, 32, 16)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 1000
    lr: float = 1e-2
    decay_every: int = 500
    decay_factor: float = 0.5
    lambda_p: float = 1.0
    lambda_s: float = 1.0
    seed: int = 0
    widths: tuple = DESK_WIDTHS
    m: int = 9
    sig_levels: tuple = (2, 2)
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        self.sig_levels = tuple(int(n) for n in self.sig_levels)
        self.betas = tuple(float(b) for b in self.betas)
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lambda_p < 0 or self.lambda_s < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lambda_p == 0 and self.lambda_s == 0:
            raise ValueError("lambda_p and lambda_s cannot both be zero")
        if self.m < 1:
            raise ValueError(f"extension width m must be >= 1, got {self.m}")
        if self.sig_levels != (2, 2):
            raise ValueError(f"only depth-2 signature layers are supported, got {self.sig_levels}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("widths", "sig_levels", "betas"):
            d[k] = list(d[k])
        return d


@dataclass
class MlpParams:
    """tanh MLP with a linear output layer."""

    widths: tuple
    weights: list
    biases: list

    @classmethod
    def init(cls, n_in: int, widths, n_out: int, rng: np.random.Generator) -> "MlpParams":
        dims = [n_in, *widths, n_out]
        ws, bs = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            ws.append(_xavier(rng, fan_in, fan_out))
            bs.append(np.zeros(fan_out))
        return cls(tuple(widths), ws, bs)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < len(self.weights) - 1:
                h = np.tanh(h)
        return h


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(n_in: int, cfg: TrainConfig) -> dict:
    """Ordered parameter dict: MLP layers then both linear heads.

    Heads start at zero so the initial prediction is the intercept alone.
    """
    rng = make_rng(cfg.seed, 2)
    mlp = MlpParams.init(n_in, cfg.widths, cfg.m, rng)
    params = {}
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        params[f"mlp.W{i}"] = w
        params[f"mlp.b{i}"] = b
    n1 = n_in + cfg.m
    n2 = n_in + 1
    params["head1.w"] = np.zeros((n1 + n1 * n1, 1))
    params["head1.b"] = np.zeros(1)
    params["head2.w"] = np.zeros((n2 + n2 * n2, 1))
    params["head2.b"] = np.zeros(1)
    return params


def mlp_from_params(params: dict, widths) -> MlpParams:
    n = len(widths) + 1
    return MlpParams(tuple(widths), [params[f"mlp.W{i}"] for i in range(n)],
                     [params[f"mlp.b{i}"] for i in range(n)])


# -- differentiable pieces -----------------------------------------------------

def mlp_forward(x: np.ndarray, pv: dict, n_layers: int) -> Var:
    h = tape.const(x)
    for i in range(n_layers):
        h = h @ pv[f"mlp.W{i}"] + pv[f"mlp.b{i}"]
        if i < n_layers - 1:
            h = tape.tanh(h)
    return h


def depth2_features(z: Var) -> Var:
    """Left-point prefix signature levels 1 and 2, shape ``(n+1, d + d*d)``."""
    n1, d = z.shape
    n = n1 - 1
    level1 = z - z[0:1]
    inc = z[1:] - z[:-1]
    outer = tape.reshape(tape.reshape(level1[:-1], (n, d, 1)) * tape.reshape(inc, (n, 1, d)),
                         (n, d * d))
    level2 = tape.prepend_zero(tape.cumsum(outer, axis=0))
    return tape.concat([level1, level2], axis=1)


def shuffle_defect(e: Var) -> Var:
    """Integration-by-parts defect per grid time, shape ``(n+1, m, m)``."""
    n1, m = e.shape
    n = n1 - 1
    rel = e - e[0:1]
    inc = e[1:] - e[:-1]
    integ = tape.prepend_zero(tape.cumsum(
        tape.reshape(rel[:-1], (n, m, 1)) * tape.reshape(inc, (n, 1, m)), axis=0))
    prod = tape.reshape(rel, (n1, m, 1)) * tape.reshape(rel, (n1, 1, m))
    return prod - integ - tape.swapaxes(integ, 1, 2)


@dataclass
class Forward:
    total: Var
    physics: Var
    shuffle: Var
    extension: Var
    x_hat: Var
    v_hat: Var
    defect: Var


def forward(params: dict, x: np.ndarray, v: np.ndarray, cfg: TrainConfig,
            pv: dict | None = None) -> Forward:
    pv = pv if pv is not None else {k: Var(a, name=k) for k, a in params.items()}
    ext = mlp_forward(x, pv, len(cfg.widths) + 1)
    feats1 = depth2_features(tape.concat([tape.const(x), ext], axis=1))
    x_hat = feats1 @ pv["head1.w"] + pv["head1.b"]
    feats2 = depth2_features(tape.concat([tape.const(x), x_hat], axis=1))
    v_hat = feats2 @ pv["head2.w"] + pv["head2.b"]
    physics = tape.mean(tape.square(v_hat - v.reshape(-1, 1)))
    defect = shuffle_defect(ext)
    shuffle = tape.total(tape.square(defect)) * (1.0 / x.shape[0])
    total = physics * cfg.lambda_p + shuffle * cfg.lambda_s
    return Forward(total, physics, shuffle, ext, x_hat, v_hat, defect)


def loss_and_grad(params: dict, x: np.ndarray, v: np.ndarray, cfg: TrainConfig):
    pv = {k: Var(a, name=k) for k, a in params.items()}
    fw = forward(params, x, v, cfg, pv)
    fw.total.backward()
    grads = {k: (var.grad if var.grad is not None else np.zeros_like(var.value))
             for k, var in pv.items()}
    return fw, grads


# -- training ------------------------------------------------------------------

@dataclass
class TrainResult:
    params: dict
    mlp: MlpParams
    physics_history: np.ndarray
    shuffle_history: np.ndarray
    shuffle_matrix: np.ndarray
    config: TrainConfig
    meta: dict = field(default_factory=dict)

    def extension(self, x: np.ndarray) -> np.ndarray:
        return self.mlp.forward(x)


def _check_grids(drivers: SampledPath, target: SampledPath):
    if len(drivers) != len(target) or not np.array_equal(drivers.times, target.times):
        raise ValueError("drivers and target must share the same time grid")
    if target.dim != 1:
        raise ValueError(f"target must be one-dimensional, got {target.dim} channels")
    if len(drivers) < 2:
        raise ValueError("training needs at least two grid points")


def train_extension(drivers: SampledPath, target: SampledPath, cfg: TrainConfig) -> TrainResult:
    """Adam on ``lambda_p * physics + lambda_s * shuffle``, full batch, one step per epoch.

    Histories record the losses evaluated before each epoch's update.
    """
    _check_grids(drivers, target)
    x = drivers.values
    v = target.values[:, 0]
    params = {k: a.copy() for k, a in init_params(x.shape[1], cfg).items()}
    first = {k: np.zeros_like(a) for k, a in params.items()}
    second = {k: np.zeros_like(a) for k, a in params.items()}
    b1, b2 = cfg.betas
    phys_hist = np.empty(cfg.epochs)
    shuf_hist = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            fw, grads = loss_and_grad(params, x, v, cfg)
        phys, shuf = float(fw.physics.value), float(fw.shuffle.value)
        if not (np.isfinite(phys) and np.isfinite(shuf)):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        phys_hist[epoch] = phys
        shuf_hist[epoch] = shuf
        lr = cfg.lr * cfg.decay_factor ** (epoch // cfg.decay_every)
        step = epoch + 1
        for k in params:
            g = grads[k]
            first[k] = b1 * first[k] + (1 - b1) * g
            second[k] = b2 * second[k] + (1 - b2) * g * g
            mhat = first[k] / (1 - b1 ** step)
            vhat = second[k] / (1 - b2 ** step)
            params[k] = params[k] - lr * mhat / (np.sqrt(vhat) + cfg.eps)
    final = forward(params, x, v, cfg)
    matrix = (final.defect.value ** 2).mean(axis=0)
    return TrainResult(params, mlp_from_params(params, cfg.widths), phys_hist, shuf_hist,
                       matrix, cfg, {"final_physics": float(final.physics.value),
                                     "final_shuffle": float(final.shuffle.value)})
