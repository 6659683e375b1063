"""From-scratch multilayer perceptron over the m! reply classes.

The network maps a feature vector to softmax probabilities over all possible
rankings. Loss treats the label bits as a mask: with p the total probability
assigned to positively-labeled replies, masked MSE is (1-p)^2 (the mean
squared error between the reduced two-point distribution (p, 1-p) and the
target (1, 0)) and masked BCE is -log p.

Training follows a fixed recipe: minibatches from reshuffled epochs, adaptive
moment (Adam) updates, a minimum iteration count, and early stopping on the
average profitability of the argmax policy over a held-out validation set.
Everything is a pure function of the seeds, so runs replay bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oracle import InstanceBatch
from .samplers import make_rng

_BCE_FLOOR = 1e-12


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activation: str = "relu"
    init_seed: int = 0

    def __post_init__(self):
        if len(self.hidden) > 3:
            raise ValueError("at most 3 hidden layers")
        if any(w < 1 for w in self.hidden) or self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("all layer widths must be >= 1")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation: {self.activation}")
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))

    @property
    def layer_dims(self) -> tuple[tuple[int, int], ...]:
        dims = (self.input_dim, *self.hidden, self.output_dim)
        return tuple(zip(dims[:-1], dims[1:]))

    @property
    def parameter_count(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_dims)


@dataclass
class TrainedNet:
    config: NetConfig
    weights: list[np.ndarray]  # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]   # per layer, (fan_out,)

    def copy(self) -> "TrainedNet":
        return TrainedNet(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 512
    learning_rate: float = 6e-3
    min_iterations: int = 220
    validate_every: int = 20
    patience: int = 10
    min_improvement: float = 0.001
    validation_size: int = 4096
    loss: str = "masked_mse"  # or "masked_bce"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.loss not in ("masked_mse", "masked_bce"):
            raise ValueError(f"unknown loss: {self.loss}")
        for name in ("batch_size", "min_iterations", "validate_every", "patience", "validation_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0 or self.min_improvement <= 0:
            raise ValueError("learning_rate and min_improvement must be positive")


@dataclass
class TrainingData:
    """Features and label masks; what the minibatch loop needs from a dataset."""

    features: np.ndarray  # (count, d) float64
    labels: np.ndarray    # (count, R) bool

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class TrainLogRow:
    iteration: int
    train_loss: float
    val_profitability: float | None


@dataclass
class TrainResult:
    net: TrainedNet
    log: list[TrainLogRow] = field(default_factory=list)
    iterations: int = 0
    best_val: float = float("-inf")


def init_net(config: NetConfig, zero: bool = False) -> TrainedNet:
    """Fan-in-scaled normal initialization (He scheme for the rectifier),
    deterministic per init_seed. ``zero`` is a test hook giving uniform
    softmax output."""
    rng = make_rng(config.init_seed)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_dims:
        if zero:
            w = np.zeros((fan_in, fan_out))
        else:
            w = rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return TrainedNet(config, weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: TrainedNet, features: np.ndarray) -> np.ndarray:
    """Softmax distribution over the m! replies; accepts a single feature
    vector or a (B, d) batch."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.config.input_dim:
        raise ValueError(
            f"feature length {x.shape[1]} != input_dim {net.config.input_dim}"
        )
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if k < last:
            np.maximum(h, 0.0, out=h)
    out = softmax(h)
    return out[0] if single else out


def masked_loss(dist: np.ndarray, labels: np.ndarray, loss_kind: str = "masked_mse") -> float:
    """Loss of one distribution against one label mask."""
    labels = np.asarray(labels, dtype=bool)
    if not labels.any():
        raise ValueError("label mask must be nonempty")
    p = float(np.asarray(dist)[labels].sum())
    if loss_kind == "masked_mse":
        return (1.0 - p) ** 2
    if loss_kind == "masked_bce":
        return -math.log(max(p, _BCE_FLOOR))
    raise ValueError(f"unknown loss: {loss_kind}")


def _forward_pass(net: TrainedNet, x: np.ndarray):
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    probs = softmax(acts[-1])
    return acts, probs


def backward(
    net: TrainedNet,
    features: np.ndarray,
    labels: np.ndarray,
    loss_kind: str = "masked_mse",
):
    """Mean loss over a batch and its exact gradients.

    Returns (loss, grads_w, grads_b). With p the positively-labeled mass and s
    the softmax output, dL/dlogit_j is -2(1-p) * s_j (mask_j - p) for masked
    MSE and s_j (p - mask_j) / p for masked BCE, batch-averaged.
    """
    x = np.asarray(features, dtype=np.float64)
    mask = np.asarray(labels, dtype=np.float64)
    B = x.shape[0]
    acts, probs = _forward_pass(net, x)
    p = (probs * mask).sum(axis=1, keepdims=True)
    if loss_kind == "masked_mse":
        loss = float(((1.0 - p) ** 2).mean())
        dlogits = -2.0 * (1.0 - p) * probs * (mask - p)
    elif loss_kind == "masked_bce":
        p_safe = np.maximum(p, _BCE_FLOOR)
        loss = float(-np.log(p_safe).mean())
        dlogits = probs * (p - mask) / p_safe
    else:
        raise ValueError(f"unknown loss: {loss_kind}")
    dlogits /= B

    grads_w = [np.empty_like(w) for w in net.weights]
    grads_b = [np.empty_like(b) for b in net.biases]
    delta = dlogits
    for k in range(len(net.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k].T) * (acts[k] > 0)
    return loss, grads_w, grads_b


class AdamState:
    """Adaptive-moment estimates for every weight and bias tensor."""

    def __init__(self, net: TrainedNet, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]

    def step(self, net: TrainedNet, grads_w, grads_b) -> None:
        cfg = self.cfg
        self.t += 1
        b1t = 1.0 - cfg.adam_beta1 ** self.t
        b2t = 1.0 - cfg.adam_beta2 ** self.t
        for k in range(len(net.weights)):
            for theta, g, mom, vel in (
                (net.weights[k], grads_w[k], self.m_w[k], self.v_w[k]),
                (net.biases[k], grads_b[k], self.m_b[k], self.v_b[k]),
            ):
                mom *= cfg.adam_beta1
                mom += (1.0 - cfg.adam_beta1) * g
                vel *= cfg.adam_beta2
                vel += (1.0 - cfg.adam_beta2) * g * g
                theta -= cfg.learning_rate * (mom / b1t) / (np.sqrt(vel / b2t) + cfg.adam_eps)


def argmax_profitability(net: TrainedNet, batch: InstanceBatch) -> float:
    """Average profitability of the argmax policy over precomputed elections."""
    probs = forward(net, batch.features)
    chosen = probs.argmax(axis=1)
    rows = np.arange(len(batch))
    gain = batch.eus[rows, chosen] - batch.eus[rows, batch.sincere_idx]
    return float((gain / batch.ranges).mean())


def train(
    net: TrainedNet,
    data: TrainingData | InstanceBatch,
    validation: InstanceBatch,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> TrainResult:
    """Minibatch training with validation-profitability early stopping.

    Batches come from epochs reshuffled without replacement. After every
    ``validate_every`` iterations the argmax policy's average profitability on
    the validation elections is measured; once ``patience`` consecutive
    validations fail to beat the best seen by ``min_improvement`` and at least
    ``min_iterations`` iterations have run, training stops.
    """
    if len(data) == 0:
        raise ValueError("training set is empty")
    net = net.copy()
    adam = AdamState(net, cfg)
    result = TrainResult(net=net)
    best = float("-inf")
    stale = 0
    iteration = 0
    order = np.empty(0, dtype=np.int64)
    cursor = 0
    while True:
        if cursor + cfg.batch_size > order.size:
            order = rng.permutation(len(data))
            cursor = 0
            if order.size < cfg.batch_size:
                order = np.tile(order, math.ceil(cfg.batch_size / max(order.size, 1)))
        take = order[cursor : cursor + cfg.batch_size]
        cursor += cfg.batch_size
        loss, gw, gb = backward(net, data.features[take], data.labels[take], cfg.loss)
        adam.step(net, gw, gb)
        iteration += 1
        if iteration % cfg.validate_every == 0:
            val = argmax_profitability(net, validation)
            result.log.append(TrainLogRow(iteration, loss, val))
            if val >= best + cfg.min_improvement:
                stale = 0
            else:
                stale += 1
            best = max(best, val)
            if stale >= cfg.patience and iteration >= cfg.min_iterations:
                break
        else:
            result.log.append(TrainLogRow(iteration, loss, None))
    result.iterations = iteration
    result.best_val = best
    return result
