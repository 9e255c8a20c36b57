"""Feed-forward NDV estimator in log domain, its trainer and its weight file.

The network maps the ``m + 6`` log features to ``log D``; ``N_l`` square
LeakyReLU layers are followed by a summarizer that halves the width down to a
single output. Training minimizes

    mean | (log D_hat - log D)^2 - (log b)^2 |  +  lambda * ||W||_2

where ``b`` is the instance-wise lower bound of the training point, so the
model is pushed towards the best error attainable for that sample rather
than towards zero error.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bounds import BoundParams, instance_lower_bound
from .datagen import TrainingPoint
from .features import FeatureConfig, featurize
from .profile import Profile

FORMAT_VERSION = 1


@dataclass
class Mlp:
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    leaky_slope: float = 0.01
    clamp_output: bool = True
    train_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix and at least one layer")
        dims = self.dims
        if dims[0] != self.feature_config.n_features:
            raise ValueError(f"input width {dims[0]} does not match m + 6 = {self.feature_config.n_features}")
        if dims[-1] != 1:
            raise ValueError(f"output width must be 1, got {dims[-1]}")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {k}: bias shape {b.shape} does not match weight shape {w.shape}")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(f"layer {k}: input width {w.shape[1]} != previous output {self.weights[k - 1].shape[0]}")

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> Mlp:
        return Mlp(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.feature_config,
            self.leaky_slope,
            self.clamp_output,
            dict(self.train_meta),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mlp):
            return NotImplemented
        return (
            self.dims == other.dims
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
            and (self.feature_config, self.leaky_slope, self.clamp_output, self.train_meta)
            == (other.feature_config, other.leaky_slope, other.clamp_output, other.train_meta)
        )


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 3e-4
    lam: float = 0.1
    bound_params: BoundParams = BoundParams()
    batch_size: int = 256
    epochs: int = 30
    seed: int = 0
    n_layers: int = 5
    n_summary: int = 2
    leaky_slope: float = 0.01
    clamp_output: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.epochs < 0 or self.n_layers < 0 or self.n_summary < 1:
            raise ValueError("epochs and N_l must be >= 0, N_s >= 1")


def layer_dims(n_features: int, n_layers: int, n_summary: int) -> list[int]:
    dims = [n_features] * (n_layers + 1)
    width = n_features
    for _ in range(n_summary - 1):
        width = math.ceil(width / 2)
        dims.append(width)
    return dims + [1]


def init_model(cfg: TrainConfig, feature_config: FeatureConfig, rng: np.random.Generator) -> Mlp:
    """Uniform fan-in initialization in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``."""
    dims = layer_dims(feature_config.n_features, cfg.n_layers, cfg.n_summary)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims, dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(weights, biases, feature_config, cfg.leaky_slope, cfg.clamp_output)


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def forward_log(model: Mlp, X: np.ndarray) -> np.ndarray:
    """``log D_hat`` for a batch of feature rows (or one row)."""
    a = X
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w.T + b
        if k < last:
            a = _leaky(a, model.leaky_slope)
    return a[..., 0]


def _clamp(est: float, d: int | None, N: int | None) -> float:
    if d is not None:
        est = max(est, float(d))
    if N is not None:
        est = min(est, float(N))
    return est


def forward(model: Mlp, x: np.ndarray, d: int | None = None, N: int | None = None) -> tuple[float, float]:
    """Return ``(log D_hat, estimate)``; the estimate is clamped to ``[d, N]`` when enabled."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dims[0],):
        raise ValueError(f"expected a feature vector of length {model.dims[0]}, got shape {x.shape}")
    d_log = float(forward_log(model, x))
    with np.errstate(over="ignore"):
        est = float(np.exp(d_log))
    if model.clamp_output:
        est = _clamp(est, d, N)
    return d_log, est


def estimate(model: Mlp, f: Profile, N: int) -> float:
    """Estimated population NDV from a sample profile and the population size."""
    x = featurize(f, N, model.feature_config)
    return forward(model, x, f.ndv, N)[1]


@dataclass
class TrainingArrays:
    """Features, log labels and squared log bounds for a set of training points."""

    X: np.ndarray
    log_D: np.ndarray
    target: np.ndarray  # (log b)^2

    def __len__(self) -> int:
        return len(self.log_D)

    def take(self, idx: np.ndarray) -> TrainingArrays:
        return TrainingArrays(self.X[idx], self.log_D[idx], self.target[idx])


def prepare(
    points: Sequence[TrainingPoint], feature_config: FeatureConfig, bound_params: BoundParams = BoundParams()
) -> TrainingArrays:
    X = np.empty((len(points), feature_config.n_features))
    log_D = np.empty(len(points))
    target = np.empty(len(points))
    for i, p in enumerate(points):
        X[i] = featurize(p.f, p.N, feature_config)
        log_D[i] = math.log(p.D)
        target[i] = math.log(instance_lower_bound(p.f.ndv, p.f.size, p.N, bound_params)) ** 2
    return TrainingArrays(X, log_D, target)


def weight_norm(model: Mlp) -> float:
    """Euclidean norm of all weight entries; biases excluded."""
    return math.sqrt(sum(float(np.sum(w * w)) for w in model.weights))


def data_loss(model: Mlp, batch: TrainingArrays) -> float:
    err = forward_log(model, batch.X) - batch.log_D
    return float(np.mean(np.abs(err * err - batch.target)))


def loss_and_grad(
    model: Mlp, batch: TrainingArrays | Sequence[TrainingPoint], cfg: TrainConfig
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Regularized loss and its gradient as ``[(dW, db), ...]`` per layer.

    The subgradient of ``|x|`` at 0 is taken as 0, and the un-clamped
    estimate enters the loss.
    """
    if not isinstance(batch, TrainingArrays):
        batch = prepare(batch, model.feature_config, cfg.bound_params)
    if len(batch) == 0:
        raise ValueError("empty batch")
    slope = model.leaky_slope
    acts = [batch.X]
    pre = []
    last = len(model.weights) - 1
    a = batch.X
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = _leaky(z, slope) if k < last else z
        acts.append(a)
    err = a[:, 0] - batch.log_D
    gap = err * err - batch.target
    norm = weight_norm(model)
    loss = float(np.mean(np.abs(gap))) + cfg.lam * norm

    dz = (np.sign(gap) * 2.0 * err / len(batch))[:, None]
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.weights)  # type: ignore[list-item]
    for k in range(last, -1, -1):
        dW = dz.T @ acts[k]
        db = dz.sum(axis=0)
        if norm > 0 and cfg.lam:
            dW = dW + cfg.lam * model.weights[k] / norm
        grads[k] = (dW, db)
        if k:
            dz = (dz @ model.weights[k]) * np.where(pre[k - 1] > 0, 1.0, slope)
    return loss, grads


def _data_grads(model: Mlp, batch: TrainingArrays) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    cfg = TrainConfig(lam=0.0)
    return loss_and_grad(model, batch, cfg)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, model: Mlp, cfg: TrainConfig) -> AdamState:
        params = [*model.weights, *model.biases]
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0, cfg.beta1, cfg.beta2, cfg.adam_eps)


def adam_step(model: Mlp, grads: list[tuple[np.ndarray, np.ndarray]], state: AdamState, lr: float, decay: float) -> None:
    """In-place Adam update with decoupled weight decay on weights only."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    n_w = len(model.weights)
    params = [*model.weights, *model.biases]
    flat = [g[0] for g in grads] + [g[1] for g in grads]
    for i, (p, g) in enumerate(zip(params, flat)):
        m, v = state.m[i], state.v[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        if i < n_w and decay:
            p -= lr * decay * p
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def train(
    dataset: Sequence[TrainingPoint] | TrainingArrays,
    cfg: TrainConfig = TrainConfig(),
    feature_config: FeatureConfig = FeatureConfig(),
    *,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[Mlp, list[float]]:
    """Mini-batch Adam; returns the final model and the per-epoch mean loss.

    Deterministic for a given ``cfg.seed``: initialization and the per-epoch
    shuffles use separate seeded streams.
    """
    data = dataset if isinstance(dataset, TrainingArrays) else prepare(dataset, feature_config, cfg.bound_params)
    if len(data) == 0:
        raise ValueError("training set is empty")
    model = init_model(cfg, feature_config, np.random.default_rng([cfg.seed, 0]))
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    state = AdamState.zeros_like(model, cfg)
    losses: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(data), cfg.batch_size):
            batch = data.take(order[start : start + cfg.batch_size])
            data_term, grads = _data_grads(model, batch)
            total += (data_term + cfg.lam * weight_norm(model)) * len(batch)
            adam_step(model, grads, state, cfg.lr, cfg.lam)
        losses.append(total / len(data))
        if on_epoch is not None:
            on_epoch(epoch, losses[-1])
    model.train_meta = {
        "lr": cfg.lr,
        "lambda": cfg.lam,
        "gamma": cfg.bound_params.gamma,
        "c": cfg.bound_params.c,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "dataset_points": len(data),
        "batch_size": cfg.batch_size,
        "n_layers": cfg.n_layers,
        "n_summary": cfg.n_summary,
        "adam": {"beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.adam_eps},
        "weight_decay": "decoupled",
    }
    return model, losses


def model_to_dict(model: Mlp) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "m": model.feature_config.m,
        "eps": model.feature_config.eps,
        "log_base": "e",
        "leaky_slope": model.leaky_slope,
        "clamp": model.clamp_output,
        "dims": model.dims,
        "layers": [{"w": w.ravel().tolist(), "b": b.tolist()} for w, b in zip(model.weights, model.biases)],
        "train_meta": model.train_meta,
    }


def model_from_dict(obj: dict[str, Any]) -> Mlp:
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {obj.get('format_version')!r}")
    try:
        fc = FeatureConfig(m=int(obj["m"]), eps=float(obj["eps"]))
        dims = [int(x) for x in obj["dims"]]
        layers = obj["layers"]
        if len(layers) != len(dims) - 1:
            raise ValueError(f"{len(layers)} layers stored for dims {dims}")
        weights, biases = [], []
        for k, layer in enumerate(layers):
            w = np.array(layer["w"], dtype=float)
            b = np.array(layer["b"], dtype=float)
            if w.size != dims[k + 1] * dims[k] or b.size != dims[k + 1]:
                raise ValueError(f"layer {k} has the wrong number of parameters for dims {dims}")
            weights.append(w.reshape(dims[k + 1], dims[k]))
            biases.append(b)
        return Mlp(weights, biases, fc, float(obj["leaky_slope"]), bool(obj["clamp"]), dict(obj.get("train_meta", {})))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model file: {exc!r}") from None


def save_model(model: Mlp, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> Mlp:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"model file {path} is not valid JSON: {exc}") from None
    return model_from_dict(obj)
