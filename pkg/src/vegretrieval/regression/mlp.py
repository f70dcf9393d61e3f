"""Multi-output tanh MLP trained by full-batch gradient descent."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .. import VARIABLES
from ..errors import ConfigurationError
from .common import OutputNorm, Prediction, as_query, make_prediction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MLPGridConfig:
    hidden_layers: tuple = (1, 2)
    neurons: tuple = (5, 10, 20)
    learning_rates: tuple = (0.1, 0.01, 0.001)
    epochs: int = 5000
    val_fraction: float = 0.2
    seed: int = 0


@dataclass
class MLPModel:
    weights: list  # weights[l] has shape (n_in, n_out)
    biases: list
    input_norm: OutputNorm
    output_norm: OutputNorm
    outputs: tuple = VARIABLES
    selection: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def init_params(sizes, rng):
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return weights, biases


def forward(weights, biases, Z):
    """Returns the network output and the per-layer activations (input first)."""
    acts = [Z]
    a = Z
    for l, (W, b) in enumerate(zip(weights, biases)):
        a = a @ W + b
        if l < len(weights) - 1:
            a = np.tanh(a)
        acts.append(a)
    return a, acts


def loss_and_grad(weights, biases, Z, T):
    """Half the per-sample squared error summed over outputs, averaged over samples."""
    n = Z.shape[0]
    out, acts = forward(weights, biases, Z)
    err = out - T
    loss = 0.5 * float(np.sum(err**2)) / n
    gW = [None] * len(weights)
    gb = [None] * len(biases)
    delta = err / n
    for l in range(len(weights) - 1, -1, -1):
        gW[l] = acts[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (1.0 - acts[l] ** 2)
    return loss, gW, gb


def train_gd(weights, biases, Z, T, learning_rate, epochs):
    """Returns trained copies and whether the loss stayed finite."""
    weights = [W.copy() for W in weights]
    biases = [b.copy() for b in biases]
    if learning_rate == 0:
        return weights, biases, True
    # divergence is detected through the loss, not reported as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            loss, gW, gb = loss_and_grad(weights, biases, Z, T)
            if not np.isfinite(loss):
                return weights, biases, False
            for l in range(len(weights)):
                weights[l] -= learning_rate * gW[l]
                biases[l] -= learning_rate * gb[l]
    finite = all(np.all(np.isfinite(W)) for W in weights) and all(np.all(np.isfinite(b)) for b in biases)
    return weights, biases, finite


def _rmse(pred, T):
    return float(np.sqrt(np.mean((pred - T) ** 2)))


def fit_mlp(X, Y, grid: MLPGridConfig = MLPGridConfig(), outputs=VARIABLES) -> MLPModel:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n = X.shape[0]
    if n < 50:
        raise ConfigurationError("MLP needs at least 50 training samples")
    rng = np.random.default_rng(grid.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(grid.val_fraction * n)))
    tr, val = perm[:-n_val], perm[-n_val:]

    in_norm = OutputNorm.fit(X[tr])
    out_norm = OutputNorm.fit(Y[tr])
    Z_tr, Z_val = in_norm.forward(X[tr]), in_norm.forward(X[val])
    T_tr, T_val = out_norm.forward(Y[tr]), out_norm.forward(Y[val])

    best = None
    for layers, width, lr in itertools.product(grid.hidden_layers, grid.neurons, grid.learning_rates):
        sizes = [X.shape[1]] + [width] * layers + [Y.shape[1]]
        cell_rng = np.random.default_rng([grid.seed, layers, width])
        W0, b0 = init_params(sizes, cell_rng)
        W, b, finite = train_gd(W0, b0, Z_tr, T_tr, lr, grid.epochs)
        score = _rmse(forward(W, b, Z_val)[0], T_val) if finite else np.inf
        if not np.isfinite(score):
            logger.info("MLP cell layers=%d width=%d lr=%g diverged", layers, width, lr)
            continue
        if best is None or score < best[0]:
            best = (score, W, b, {"hidden_layers": layers, "neurons": width,
                                  "learning_rate": lr, "val_rmse": score})
    if best is None:
        raise ConfigurationError("every MLP grid cell diverged")
    _, W, b, selection = best
    return MLPModel(W, b, in_norm, out_norm, tuple(outputs), selection)


def fit_mlp_multi(train, grid: MLPGridConfig = MLPGridConfig()) -> MLPModel:
    model = fit_mlp(train.reflectance, train.truths, grid)
    model.metadata = {"n_train": len(train), "seed": train.seed, "grid_seed": grid.seed}
    return model


def predict_mlp_raw(m: MLPModel, X):
    X = as_query(X, m.weights[0].shape[0])
    out, _ = forward(m.weights, m.biases, m.input_norm.forward(X))
    return m.output_norm.inverse(out)


def predict_mlp(m: MLPModel, X, clip=True) -> Prediction:
    return make_prediction(predict_mlp_raw(m, X), m.outputs, None, clip)
