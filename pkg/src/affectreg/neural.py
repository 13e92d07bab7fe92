"""Feed-forward regression network written directly in numpy.

Architecture: ``input -> 256 -> 128 -> 1`` with ReLU or GELU hidden units
and dropout in front of every linear layer. Training uses MSE, AdamW,
a reduce-on-plateau learning-rate schedule and keeps the parameters from
the epoch with the lowest validation loss.
"""

from __future__ import annotations

import copy
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf

from .container import read_container, write_container
from .lexfeat import FeatureScaler

logger = logging.getLogger(__name__)

FFN_TAG = b"FFN "
MAX_DROPOUT = 0.9
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class TrainingError(RuntimeError):
    """Training produced a non-finite loss or gradient."""


def gelu(x):
    """Exact GELU, ``x * Phi(x)``."""
    x = np.asarray(x, dtype=np.float64)
    return x * 0.5 * (1.0 + erf(x / _SQRT2))


def gelu_grad(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x):
    return (x > 0).astype(np.float64)


ACTIVATIONS = {"relu": (relu, relu_grad), "gelu": (gelu, gelu_grad)}


def mse_loss(pred, gold) -> float:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gold = np.asarray(gold, dtype=np.float64).ravel()
    if pred.size == 0 or pred.size != gold.size:
        raise ValueError(f"mse needs equal non-empty inputs, got {pred.size} and {gold.size}")
    return float(np.mean((pred - gold) ** 2))


@dataclass
class DropoutSpec:
    """Dropout before each of the three linear layers.

    ``fixed`` keeps every rate at ``p``. ``adaptive`` moves each rate by
    ``eta`` per epoch in the direction of the validation-minus-train loss
    gap, within ``[min_rate, max_rate]``.
    """

    mode: str = "fixed"
    p: float = 0.5
    eta: float = 0.01
    min_rate: float = 0.0
    max_rate: float = MAX_DROPOUT
    rates: list = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError(f"unknown dropout mode {self.mode!r}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("dropout p must lie in [0, 1)")
        if not 0.0 <= self.min_rate <= self.max_rate <= MAX_DROPOUT:
            raise ValueError(f"dropout bounds must satisfy 0 <= min <= max <= {MAX_DROPOUT}")
        if not self.rates:
            self.rates = [self.p] * 3
        self.rates = [float(r) for r in self.rates]


def adaptive_dropout_step(spec: DropoutSpec, train_loss: float, validation_loss: float) -> list:
    """Nudge every rate by ``eta * sign(val - train)`` and clamp; fixed mode is a no-op."""
    if spec.mode != "adaptive":
        return list(spec.rates)
    direction = float(np.sign(validation_loss - train_loss))
    spec.rates = [
        float(min(max(r + spec.eta * direction, spec.min_rate), spec.max_rate))
        for r in spec.rates
    ]
    return list(spec.rates)


@dataclass
class ForwardCache:
    inputs: list  # dropped-out input of each linear layer
    masks: list  # inverted-dropout multipliers, or None
    preacts: list  # hidden pre-activations
    pred: np.ndarray


class FfnModel:
    def __init__(self, weights, biases, activation="gelu", dropout=None, scaler=None, seed=0):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.dropout = dropout if dropout is not None else DropoutSpec()
        self.scaler: Optional[FeatureScaler] = scaler
        self.seed = seed
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not match {w.shape}")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"layer {i}: input width does not match previous layer")
        if len(self.dropout.rates) != len(self.weights):
            self.dropout.rates = [self.dropout.p] * len(self.weights)

    @classmethod
    def create(cls, input_dim, hidden=(256, 128), activation="gelu", dropout=None, seed=0):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization, seeded."""
        rng = np.random.default_rng(seed)
        sizes = [int(input_dim), *hidden, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, activation, dropout, seed=seed)

    @property
    def sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "FfnModel":
        return copy.deepcopy(self)

    def forward(self, x, training=False, rng=None, masks=None):
        """Run the network on a batch.

        With ``training`` set, a dropout mask is drawn from ``rng`` for the
        input of each linear layer (or taken from ``masks``) and stored in
        the returned cache.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} input features, got {x.shape[1]}")
        act, _ = ACTIVATIONS[self.activation]
        inputs, used_masks, preacts = [], [], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            mask = None
            if training:
                if masks is not None:
                    mask = masks[i]
                else:
                    rate = self.dropout.rates[i]
                    if rate > 0:
                        if rng is None:
                            raise ValueError("training forward pass needs an rng")
                        keep = rng.random(h.shape) >= rate
                        mask = keep / (1.0 - rate)
                if mask is not None:
                    h = h * mask
            used_masks.append(mask)
            inputs.append(h)
            z = h @ w + b
            if i < last:
                preacts.append(z)
                h = act(z)
            else:
                h = z
        pred = h[:, 0]
        return pred, ForwardCache(inputs, used_masks, preacts, pred)

    def predict(self, x) -> np.ndarray:
        return self.forward(x, training=False)[0]

    def backward(self, cache: ForwardCache, gold) -> list:
        """Gradients of the batch-mean MSE, ordered like ``parameters()``."""
        gold = np.asarray(gold, dtype=np.float64).ravel()
        n = cache.pred.shape[0]
        if gold.shape[0] != n or len(cache.inputs) != len(self.weights):
            raise ValueError("cache does not match this batch or model")
        for inp, w in zip(cache.inputs, self.weights):
            if inp.shape[1] != w.shape[0]:
                raise ValueError("stale cache: layer shapes changed since forward")
        _, act_grad = ACTIVATIONS[self.activation]
        grads = [None] * (2 * len(self.weights))
        dz = (2.0 / n) * (cache.pred - gold)[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = cache.inputs[i].T @ dz
            grads[2 * i + 1] = dz.sum(axis=0)
            if i == 0:
                break
            dh = dz @ self.weights[i].T
            if cache.masks[i] is not None:
                dh = dh * cache.masks[i]
            dz = dh * act_grad(cache.preacts[i - 1])
        return grads

    def save(self, path) -> None:
        meta = {
            "sizes": self.sizes,
            "activation": self.activation,
            "dropout": asdict(self.dropout),
            "seed": self.seed,
            "has_scaler": self.scaler is not None,
        }
        arrays = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        if self.scaler is not None:
            arrays["scaler_mean"] = self.scaler.mean
            arrays["scaler_std"] = self.scaler.std
        write_container(path, FFN_TAG, meta, arrays)

    @classmethod
    def load(cls, path) -> "FfnModel":
        meta, arrays = read_container(path, FFN_TAG)
        n_layers = len(meta["sizes"]) - 1
        weights = [arrays[f"W{i}"] for i in range(n_layers)]
        biases = [arrays[f"b{i}"] for i in range(n_layers)]
        scaler = None
        if meta["has_scaler"]:
            scaler = FeatureScaler(arrays["scaler_mean"], arrays["scaler_std"])
        return cls(weights, biases, meta["activation"], DropoutSpec(**meta["dropout"]),
                   scaler, meta["seed"])


def forward(model: FfnModel, batch, training=False, rng=None):
    return model.forward(batch, training=training, rng=rng)


def backward(model: FfnModel, cache: ForwardCache, gold):
    return model.backward(cache, gold)


class AdamW:
    """Adam with decoupled weight decay.

    ``p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * p``
    """

    def __init__(self, params: Sequence[np.ndarray], betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, lr: float) -> None:
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError("non-finite gradient; step aborted")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            p -= update + lr * self.weight_decay * p


def adamw_step(params, grads, state: AdamW, lr: float):
    state.step(params, grads, lr)
    return params


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` once more than ``patience``
    consecutive reports fail to improve on the best loss by ``threshold``."""

    def __init__(self, lr, factor=0.8, patience=3, min_lr=1e-6, threshold=1e-8):
        if not 0.0 < factor < 1.0:
            raise ValueError("factor must lie in (0, 1)")
        if not 0.0 < min_lr <= lr:
            raise ValueError("need 0 < min_lr <= lr")
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.threshold = threshold
        self.best = math.inf
        self.bad_epochs = 0

    def step(self, loss: float) -> float:
        if loss < self.best - self.threshold:
            self.best = loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        if self.bad_epochs > self.patience:
            self.lr = max(self.lr * self.factor, self.min_lr)
            self.bad_epochs = 0
        return self.lr


def scheduler_step(state: PlateauScheduler, validation_loss: float) -> float:
    return state.step(validation_loss)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    min_lr: float = 1e-6
    epochs: int = 100
    batch_size: int = 64
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    factor: float = 0.8
    patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.min_lr <= self.learning_rate:
            raise ValueError("need 0 < min_lr <= learning_rate")
        if not 0.0 < self.factor < 1.0:
            raise ValueError("factor must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        self.betas = tuple(self.betas)


@dataclass
class TrainTrace:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    dropout_rates: list = field(default_factory=list)
    best_epoch: int = -1
    threads: Optional[str] = None

    def to_tsv(self, path) -> None:
        lines = ["epoch\ttrain_loss\tval_loss\tlr"]
        for i, (tl, vl, lr) in enumerate(zip(self.train_loss, self.val_loss, self.lr)):
            lines.append(f"{i}\t{tl!r}\t{vl!r}\t{lr!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _blas_threads():
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        if os.environ.get(var):
            return f"{var}={os.environ[var]}"
    return f"default (cpu_count={os.cpu_count()})"


def train(model: FfnModel, x_train, y_train, x_val, y_val, config: TrainConfig = TrainConfig()):
    """Train a copy of ``model``; return the best-validation snapshot and the trace."""
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("training and validation sets must be non-empty")

    model = model.copy()
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    opt = AdamW(params, betas=config.betas, eps=config.eps, weight_decay=config.weight_decay)
    sched = PlateauScheduler(config.learning_rate, config.factor, config.patience, config.min_lr)
    trace = TrainTrace(threads=_blas_threads())
    best_loss = math.inf
    best = model.copy()

    n = len(x_train)
    for epoch in range(config.epochs):
        lr = sched.lr
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred, cache = model.forward(x_train[idx], training=True, rng=rng)
            loss = mse_loss(pred, y_train[idx])
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            opt.step(params, model.backward(cache, y_train[idx]), lr)
            total += loss * len(idx)
        train_loss = total / n
        val_loss = mse_loss(model.predict(x_val), y_val)
        if not math.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")

        trace.train_loss.append(train_loss)
        trace.val_loss.append(val_loss)
        trace.lr.append(lr)
        trace.dropout_rates.append(list(model.dropout.rates))
        if val_loss < best_loss:
            best_loss = val_loss
            best = model.copy()
            trace.best_epoch = epoch
        sched.step(val_loss)
        adaptive_dropout_step(model.dropout, train_loss, val_loss)
        logger.debug("epoch %d train %.4f val %.4f lr %.2e", epoch, train_loss, val_loss, lr)

    return best, trace
