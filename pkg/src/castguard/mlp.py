"""From-scratch multi-layer perceptron with softmax output and backpropagation.

Used both as the standalone neural-network classifier and as the member
model of the deep ensemble.  Everything is plain numpy in float64; all
randomness flows through explicit seeds, so (seed, data, config) fixes
the trained weights bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import TrainingError, ValidationError

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer sizes include input and output: (input_dim, hidden..., 2)."""

    layer_sizes: tuple
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise ValidationError(f"need at least one hidden layer, got layer_sizes {sizes}")
        if any(s < 1 for s in sizes):
            raise ValidationError(f"layer sizes must be positive, got {sizes}")
        if sizes[-1] != 2:
            raise ValidationError(f"output layer must have exactly 2 units, got {sizes[-1]}")
        if self.activation != "relu":
            raise ValidationError(f"unsupported activation {self.activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValidationError(f"invalid training config: {self}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")


@dataclass(frozen=True)
class MlpModel:
    architecture: MlpArchitecture
    weights: tuple  # per layer, shape (fan_in, fan_out)
    biases: tuple  # per layer, shape (fan_out,)
    training_log: tuple = field(default_factory=tuple)  # per-epoch mean cross-entropy

    @property
    def input_dim(self) -> int:
        return self.architecture.layer_sizes[0]

    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def mlp_init(arch: MlpArchitecture) -> MlpModel:
    """He-uniform weights (limit sqrt(6/fan_in)), zero biases, keyed to arch.seed."""
    rng = np.random.default_rng(arch.seed)
    weights = []
    biases = []
    sizes = arch.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(architecture=arch, weights=tuple(weights), biases=tuple(biases))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; safe for logits of any finite magnitude."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / np.sum(exps, axis=-1, keepdims=True)


def _forward_pass(model: MlpModel, x: np.ndarray):
    """Returns (probs, activations, pre_activations) for a batch."""
    activations = [x]
    pre_acts = []
    a = x
    last = len(model.weights) - 1
    for idx, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre_acts.append(z)
        if idx < last:
            a = np.maximum(z, 0.0)
            activations.append(a)
    probs = softmax(pre_acts[-1])
    return probs, activations, pre_acts


def forward_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class-probability matrix (n, 2) for a feature matrix (n, input_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValidationError(
            f"expected feature matrix with {model.input_dim} columns, got shape {x.shape}"
        )
    probs, _, _ = _forward_pass(model, x)
    return probs


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Probability vector (length 2) for one sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise ValidationError(f"expected vector of dim {model.input_dim}, got shape {x.shape}")
    return forward_batch(model, x[None, :])[0]


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true class."""
    picked = probs[np.arange(labels.shape[0]), labels]
    return float(-np.mean(np.log(np.clip(picked, 1e-300, None))))


def mlp_gradient(model: MlpModel, batch: tuple) -> list:
    """Exact analytic gradient of the mean cross-entropy over the batch.

    Returns one (dW, db) pair per layer, same shapes as the parameters.
    """
    features, labels = batch
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError(f"batch features must be a nonempty matrix, got shape {x.shape}")
    if x.shape[1] != model.input_dim:
        raise ValidationError(
            f"expected feature matrix with {model.input_dim} columns, got shape {x.shape}"
        )
    if y.shape != (x.shape[0],):
        raise ValidationError(f"batch labels shape {y.shape} does not match {x.shape[0]} rows")

    probs, activations, pre_acts = _forward_pass(model, x)
    n = x.shape[0]
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(n), y] = 1.0
    delta = (probs - one_hot) / n  # softmax + cross-entropy collapses to this

    grads: list = [None] * len(model.weights)
    for layer in range(len(model.weights) - 1, -1, -1):
        a_prev = activations[layer]
        grads[layer] = (a_prev.T @ delta, np.sum(delta, axis=0))
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (pre_acts[layer - 1] > 0)
    return grads


def mlp_train(model: MlpModel, features, labels, config: TrainConfig) -> MlpModel:
    """Mini-batch training on (features, labels); returns a new trained model.

    The input model is left untouched.  Raises TrainingError naming the
    epoch if the loss ever goes non-finite.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValidationError(
            f"expected feature matrix with {model.input_dim} columns, got shape {x.shape}"
        )
    if y.shape != (x.shape[0],):
        raise ValidationError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    if np.unique(y).size < 2:
        raise TrainingError("degenerate training set: both classes must be present")

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    if config.optimizer == "adam":
        m_w = [np.zeros_like(w) for w in weights]
        v_w = [np.zeros_like(w) for w in weights]
        m_b = [np.zeros_like(b) for b in biases]
        v_b = [np.zeros_like(b) for b in biases]
        step = 0

    rng = np.random.default_rng(config.shuffle_seed)
    n = x.shape[0]
    log = []
    work = MlpModel(architecture=model.architecture, weights=tuple(weights), biases=tuple(biases))
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            # exploding weights produce inf/nan transients; the loss check
            # below is the detector, so keep the warnings quiet
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                probs, _, _ = _forward_pass(work, xb)
                batch_loss = cross_entropy(probs, yb)
            if not np.isfinite(batch_loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            epoch_loss += batch_loss * idx.size
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                grads = mlp_gradient(work, (xb, yb))
            if config.optimizer == "adam":
                step += 1
                bc1 = 1.0 - _ADAM_BETA1**step
                bc2 = 1.0 - _ADAM_BETA2**step
                for layer, (dw, db) in enumerate(grads):
                    m_w[layer] = _ADAM_BETA1 * m_w[layer] + (1 - _ADAM_BETA1) * dw
                    v_w[layer] = _ADAM_BETA2 * v_w[layer] + (1 - _ADAM_BETA2) * dw**2
                    m_b[layer] = _ADAM_BETA1 * m_b[layer] + (1 - _ADAM_BETA1) * db
                    v_b[layer] = _ADAM_BETA2 * v_b[layer] + (1 - _ADAM_BETA2) * db**2
                    weights[layer] -= config.learning_rate * (m_w[layer] / bc1) / (
                        np.sqrt(v_w[layer] / bc2) + _ADAM_EPS
                    )
                    biases[layer] -= config.learning_rate * (m_b[layer] / bc1) / (
                        np.sqrt(v_b[layer] / bc2) + _ADAM_EPS
                    )
            else:
                for layer, (dw, db) in enumerate(grads):
                    weights[layer] -= config.learning_rate * dw
                    biases[layer] -= config.learning_rate * db
        log.append(epoch_loss / n)
    return replace(work, training_log=tuple(log))
