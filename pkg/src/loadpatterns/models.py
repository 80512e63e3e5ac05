"""Estimators from household features to pattern distributions.

Three models share one interface: a multilayer perceptron with a
softmax output head trained by backpropagation on mean squared error,
and linear / degree-2 polynomial least-squares baselines with light
ridge damping. All of them standardize features with statistics frozen
from their training set, train deterministically for a fixed seed, and
serialize to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-15


class NumericalError(RuntimeError):
    """Training or evaluation produced non-finite numbers."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    train_fraction: float = 0.8

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 1:
            raise ValueError("epochs and batch_size must be positive")
        if min(self.learning_rate, self.beta1, self.beta2, self.adam_epsilon) <= 0:
            raise ValueError("optimizer constants must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature shift/scale frozen from a training set."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=float)
        return cls(mean=x.mean(axis=0), std=np.maximum(x.std(axis=0), 1e-9))

    @classmethod
    def identity(cls, n_features: int) -> "Standardizer":
        return cls(mean=np.zeros(n_features), std=np.ones(n_features))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse_transform(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.std + self.mean


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable for arbitrarily large logits.

    Outputs are floored at PROB_FLOOR and renormalized so every
    component stays strictly inside (0, 1) even when exp() underflows;
    the perturbation is ~1e-15, far below any tolerance used here.
    """
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    p = np.maximum(p, PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class MlpModel:
    """Fully-connected net: rectifier hidden layers, softmax output."""

    layer_sizes: tuple[int, ...]
    weights: list
    biases: list
    standardizer: Standardizer

    def __post_init__(self):
        for w, b in zip(self.weights, self.biases):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")

    def forward(self, x) -> np.ndarray:
        """Probabilities over patterns; accepts one vector or a batch."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"expected {self.layer_sizes[0]} features, got {h.shape[1]}"
            )
        if not np.all(np.isfinite(h)):
            raise ValueError("inputs must be finite")
        h = self.standardizer.transform(h)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        p = softmax(h @ self.weights[-1] + self.biases[-1])
        return p[0] if single else p

    predict = forward


def init_mlp(
    layer_sizes, rng, standardizer: Standardizer | None = None
) -> MlpModel:
    """Scaled-uniform weight init (±sqrt(6/(fan_in+fan_out))), zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layers")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    weights, biases = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        limit = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    if standardizer is None:
        standardizer = Standardizer.identity(sizes[0])
    return MlpModel(sizes, weights, biases, standardizer)


def mlp_loss(model: MlpModel, x: np.ndarray, targets: np.ndarray) -> float:
    """MSE between softmax outputs and targets, averaged over examples
    and output dimensions."""
    p = np.atleast_2d(model.forward(x))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    return float(np.mean((p - t) ** 2))


def mlp_gradients(model: MlpModel, x: np.ndarray, targets: np.ndarray):
    """Analytic loss and parameter gradients via backpropagation.

    The softmax probability floor is treated as identity in the
    backward pass; its effect is ~1e-15 and only active at logit
    extremes where training has already diverged.
    """
    xs = model.standardizer.transform(np.atleast_2d(np.asarray(x, dtype=float)))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    n, k = t.shape

    activations = [xs]
    h = xs
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        activations.append(h)
    p = softmax(h @ model.weights[-1] + model.biases[-1])
    loss = float(np.mean((p - t) ** 2))

    grad_p = (2.0 / (n * k)) * (p - t)
    # softmax Jacobian applied row-wise
    delta = p * (grad_p - (grad_p * p).sum(axis=1, keepdims=True))
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (activations[layer] > 0)
    return loss, grads_w, grads_b


def mlp_train(
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    hidden_sizes: tuple[int, ...] = (100, 100, 100),
):
    """Train an MLP with minibatch adaptive-moment updates.

    Returns (model, per-epoch training loss). Deterministic for a fixed
    seed; aborts with NumericalError if the loss goes non-finite.
    """
    x = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float)
    if x.ndim != 2 or t.ndim != 2 or len(x) != len(t):
        raise ValueError("features and targets must be matching 2-D arrays")
    if len(x) == 0:
        raise ValueError("empty training set")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
        raise ValueError("training data must be finite")
    if np.any(t < -1e-12) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("targets must lie on the probability simplex")

    n = len(x)
    scaler = Standardizer.fit(x)
    rng = np.random.default_rng(cfg.seed)
    model = init_mlp(
        (x.shape[1], *hidden_sizes, t.shape[1]), rng, standardizer=scaler
    )
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    model = MlpModel(model.layer_sizes, weights, biases, scaler)

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0
    curve = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, gw, gb = mlp_gradients(model, x[batch], t[batch])
            step += 1
            c1 = 1.0 - cfg.beta1**step
            c2 = 1.0 - cfg.beta2**step
            for i in range(len(weights)):
                m_w[i] = cfg.beta1 * m_w[i] + (1 - cfg.beta1) * gw[i]
                v_w[i] = cfg.beta2 * v_w[i] + (1 - cfg.beta2) * gw[i] ** 2
                weights[i] -= cfg.learning_rate * (m_w[i] / c1) / (
                    np.sqrt(v_w[i] / c2) + cfg.adam_epsilon
                )
                m_b[i] = cfg.beta1 * m_b[i] + (1 - cfg.beta1) * gb[i]
                v_b[i] = cfg.beta2 * v_b[i] + (1 - cfg.beta2) * gb[i] ** 2
                biases[i] -= cfg.learning_rate * (m_b[i] / c1) / (
                    np.sqrt(v_b[i] / c2) + cfg.adam_epsilon
                )
        finite = all(
            np.all(np.isfinite(w)) for w in weights
        ) and all(np.all(np.isfinite(b)) for b in biases)
        if not finite:
            raise NumericalError(f"non-finite parameters after epoch {epoch + 1}")
        curve[epoch] = mlp_loss(model, x, t)
        if not np.isfinite(curve[epoch]):
            raise NumericalError(f"non-finite loss after epoch {epoch + 1}")
    return model, curve


def poly_features(xs: np.ndarray) -> np.ndarray:
    """Degree-2 monomial map: linear terms first, then x_i*x_j for i<=j."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    blocks = [xs]
    for i in range(xs.shape[1]):
        blocks.append(xs[:, i:] * xs[:, i : i + 1])
    return np.hstack(blocks)


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (n_features, n_patterns)
    intercept: np.ndarray
    standardizer: Standardizer

    def predict(self, x) -> np.ndarray:
        xs = self.standardizer.transform(np.atleast_2d(np.asarray(x, dtype=float)))
        return xs @ self.weights + self.intercept


@dataclass(frozen=True)
class PolyModel:
    weights: np.ndarray  # (n_mapped_features, n_patterns)
    intercept: np.ndarray
    standardizer: Standardizer

    def predict(self, x) -> np.ndarray:
        xs = self.standardizer.transform(np.atleast_2d(np.asarray(x, dtype=float)))
        return poly_features(xs) @ self.weights + self.intercept


def _ridge_solve(phi: np.ndarray, y: np.ndarray, ridge_lambda: float):
    """Least squares with ridge damping on the (mapped) features, solved
    by SVD-backed lstsq; the intercept column is not damped."""
    n, m = phi.shape
    a = np.zeros((n + m, m + 1))
    a[:n, :m] = phi
    a[:n, m] = 1.0
    a[n:, :m] = math.sqrt(ridge_lambda) * np.eye(m)
    b = np.zeros((n + m, y.shape[1]))
    b[:n] = y
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    return coef[:m], coef[m]


def _validate_fit_inputs(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or len(x) != len(y):
        raise ValueError("features and targets must be matching 2-D arrays")
    if len(x) == 0:
        raise ValueError("empty training set")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    return x, y


def linear_fit(features, targets, ridge_lambda: float = 1e-6) -> LinearModel:
    x, y = _validate_fit_inputs(features, targets)
    scaler = Standardizer.fit(x)
    w, b = _ridge_solve(scaler.transform(x), y, ridge_lambda)
    return LinearModel(weights=w, intercept=b, standardizer=scaler)


def poly_fit(features, targets, ridge_lambda: float = 1e-6) -> PolyModel:
    x, y = _validate_fit_inputs(features, targets)
    scaler = Standardizer.fit(x)
    w, b = _ridge_solve(poly_features(scaler.transform(x)), y, ridge_lambda)
    return PolyModel(weights=w, intercept=b, standardizer=scaler)


def evaluate_mse(model, features, targets) -> float:
    """Mean over test examples and output dimensions of squared error."""
    x = np.asarray(features, dtype=float)
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if len(y) == 0 or (x.ndim == 2 and len(x) == 0):
        raise ValueError("empty test set")
    p = np.atleast_2d(model.predict(x))
    return float(np.mean((p - y) ** 2))


def split_train_test(household_ids, fraction: float, seed: int):
    """Household-level split: seeded shuffle, first ceil(fraction*n) train."""
    ids = list(household_ids)
    if len(ids) < 2:
        raise ValueError("need at least 2 households to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(ids))
    n_train = math.ceil(fraction * len(ids))
    train = [ids[i] for i in order[:n_train]]
    test = [ids[i] for i in order[n_train:]]
    return train, test


def save_model(model, path, train_config: TrainConfig | None = None) -> None:
    if isinstance(model, MlpModel):
        payload = {
            "kind": "mlp",
            "layer_sizes": list(model.layer_sizes),
            "weights": [w.ravel().tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
        if train_config is not None:
            payload["config"] = {
                "epochs": train_config.epochs,
                "batch_size": train_config.batch_size,
                "learning_rate": train_config.learning_rate,
                "beta1": train_config.beta1,
                "beta2": train_config.beta2,
                "adam_epsilon": train_config.adam_epsilon,
                "train_fraction": train_config.train_fraction,
            }
            payload["seed"] = train_config.seed
    elif isinstance(model, (LinearModel, PolyModel)):
        payload = {
            "kind": "linear" if isinstance(model, LinearModel) else "poly",
            "weights": model.weights.tolist(),
            "intercept": model.intercept.tolist(),
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    payload["standardizer"] = {
        "mean": model.standardizer.mean.tolist(),
        "std": model.standardizer.std.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        payload = json.load(fh)
    scaler = Standardizer(
        mean=np.array(payload["standardizer"]["mean"]),
        std=np.array(payload["standardizer"]["std"]),
    )
    kind = payload["kind"]
    if kind == "mlp":
        sizes = tuple(payload["layer_sizes"])
        weights = [
            np.array(flat).reshape(n_in, n_out)
            for flat, n_in, n_out in zip(payload["weights"], sizes, sizes[1:])
        ]
        biases = [np.array(b) for b in payload["biases"]]
        return MlpModel(sizes, weights, biases, scaler)
    if kind == "linear":
        return LinearModel(
            np.array(payload["weights"]), np.array(payload["intercept"]), scaler
        )
    if kind == "poly":
        return PolyModel(
            np.array(payload["weights"]), np.array(payload["intercept"]), scaler
        )
    raise ValueError(f"unknown model kind {kind!r}")
