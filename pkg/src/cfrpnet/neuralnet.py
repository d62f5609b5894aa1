"""Flat-parameter feedforward network.

All weights and biases live in one 1-D vector, ordered layer by layer
with each layer's weight matrix (row-major by input unit) followed by its
biases. That vector is the search space handed to the population
optimizers; a full-batch gradient-descent trainer provides the non-swarm
baseline. ``forward`` and ``gradient`` are pure; a weight vector is an
immutable value safe to share.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import DEFAULT_FEATURES, TARGET_FIELD, NormalizationSpec, feature_matrix

MODEL_FORMAT = "cfrpnet-model"
MODEL_VERSION = 1


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


# name -> (activation, derivative as a function of (z, act(z)))
_ACTIVATIONS = {
    "sigmoid": (_sigmoid, lambda z, a: a * (1.0 - a)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: np.where(z > 0.0, 1.0, 0.0)),
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
}
HIDDEN_ACTIVATIONS = ("sigmoid", "relu", "tanh")
OUTPUT_ACTIVATIONS = ("linear", "sigmoid")


@dataclass(frozen=True)
class NetworkTopology:
    """Layer sizes and activations of a fully connected feedforward net."""

    input_size: int
    hidden_sizes: tuple[int, ...] = (50,)
    output_size: int = 1
    hidden_activation: str = "tanh"
    output_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(s) for s in self.hidden_sizes))
        object.__setattr__(self, "input_size", int(self.input_size))
        object.__setattr__(self, "output_size", int(self.output_size))
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError(f"all layer sizes must be >= 1, got {self.layer_sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"hidden_activation must be one of {HIDDEN_ACTIVATIONS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden_sizes, self.output_size)

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "hidden_sizes": list(self.hidden_sizes),
            "output_size": self.output_size,
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "NetworkTopology":
        return cls(
            input_size=data["input_size"],
            hidden_sizes=tuple(data.get("hidden_sizes", ())),
            output_size=data.get("output_size", 1),
            hidden_activation=data.get("hidden_activation", "tanh"),
            output_activation=data.get("output_activation", "linear"),
        )


def parameter_count(topology: NetworkTopology) -> int:
    """Total number of weights and biases across all layers."""
    sizes = topology.layer_sizes
    return sum(m * k + k for m, k in zip(sizes[:-1], sizes[1:]))


def unflatten(topology: NetworkTopology, weights) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Split a flat parameter vector into per-layer (W, b) views."""
    w = np.asarray(weights, dtype=float)
    expected = parameter_count(topology)
    if w.shape != (expected,):
        raise ValueError(f"weight vector has length {w.size}, topology needs {expected}")
    mats, biases = [], []
    pos = 0
    sizes = topology.layer_sizes
    for m, k in zip(sizes[:-1], sizes[1:]):
        mats.append(w[pos:pos + m * k].reshape(m, k))
        pos += m * k
        biases.append(w[pos:pos + k])
        pos += k
    return mats, biases


def flatten(mats: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> np.ndarray:
    parts = []
    for W, b in zip(mats, biases):
        parts.append(np.asarray(W, dtype=float).ravel())
        parts.append(np.asarray(b, dtype=float).ravel())
    return np.concatenate(parts)


def init_weights(
    topology: NetworkTopology, seed: int, scheme: str = "uniform", half_width: float = 0.5
) -> np.ndarray:
    """Draw a flat parameter vector, i.i.d. uniform on [-half_width, half_width]."""
    if scheme != "uniform":
        raise ValueError(f"unknown init scheme {scheme!r}")
    if half_width < 0.0:
        raise ValueError("half_width must be non-negative")
    rng = np.random.default_rng(seed)
    return rng.uniform(-half_width, half_width, parameter_count(topology))


def _forward_cached(topology, weights, X):
    mats, biases = unflatten(topology, weights)
    act_h, _ = _ACTIVATIONS[topology.hidden_activation]
    act_o, _ = _ACTIVATIONS[topology.output_activation]
    zs = []
    activations = [X]
    a = X
    last = len(mats) - 1
    for layer, (W, b) in enumerate(zip(mats, biases)):
        z = a @ W + b
        a = act_o(z) if layer == last else act_h(z)
        zs.append(z)
        activations.append(a)
    return mats, zs, activations


def forward_batch(topology: NetworkTopology, weights, X) -> np.ndarray:
    """Predictions for a batch of inputs, shape (n, output_size)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != topology.input_size:
        raise ValueError(f"expected inputs of shape (n, {topology.input_size}), got {X.shape}")
    _, _, activations = _forward_cached(topology, weights, X)
    return activations[-1]


def forward(topology: NetworkTopology, weights, x):
    """Prediction for a single feature vector; a scalar when output_size is 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != topology.input_size:
        raise ValueError(f"expected {topology.input_size} inputs, got shape {x.shape}")
    out = forward_batch(topology, weights, x[None, :])[0]
    return float(out[0]) if topology.output_size == 1 else out


def _check_batch(topology, X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != topology.input_size:
        raise ValueError(f"expected inputs of shape (n, {topology.input_size}), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("batch is empty")
    if y.ndim == 1:
        if topology.output_size != 1:
            raise ValueError("1-D targets require output_size 1")
        y = y[:, None]
    if y.shape != (X.shape[0], topology.output_size):
        raise ValueError(f"targets have shape {y.shape}, expected ({X.shape[0]}, {topology.output_size})")
    return X, y


def loss_mse(topology: NetworkTopology, weights, X, y) -> float:
    """Mean squared error of the forward pass over a batch."""
    X, Y = _check_batch(topology, X, y)
    pred = forward_batch(topology, weights, X)
    return float(np.mean((pred - Y) ** 2))


def gradient(topology: NetworkTopology, weights, X, y) -> np.ndarray:
    """Exact gradient of the batch MSE with respect to the flat parameters."""
    X, Y = _check_batch(topology, X, y)
    mats, zs, activations = _forward_cached(topology, weights, X)
    _, dact_h = _ACTIVATIONS[topology.hidden_activation]
    _, dact_o = _ACTIVATIONS[topology.output_activation]
    pred = activations[-1]
    delta = (2.0 * (pred - Y) / pred.size) * dact_o(zs[-1], pred)
    grads_w: list[np.ndarray] = [None] * len(mats)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(mats)  # type: ignore[list-item]
    for layer in range(len(mats) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ mats[layer].T) * dact_h(zs[layer - 1], activations[layer])
    return flatten(grads_w, grads_b)


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch}: loss={loss}")
        self.epoch = epoch
        self.loss = loss


@dataclass
class BackpropConfig:
    learning_rate: float = 0.05
    epochs: int = 900
    seed: int = 0
    init_half_width: float = 0.5
    early_stop_patience: int | None = None
    early_stop_tol: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "BackpropConfig":
        allowed = {"learning_rate", "epochs", "seed", "init_half_width",
                   "early_stop_patience", "early_stop_tol"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ValueError(f"unknown BackpropConfig key(s): {', '.join(unknown)}")
        return cls(**data)


def train_backprop(
    topology: NetworkTopology, X, y, config: BackpropConfig | None = None, **overrides
) -> tuple[np.ndarray, list[float]]:
    """Full-batch gradient descent on MSE.

    Returns the trained flat weights and the loss history; entry 0 is the
    loss at initialization, so epochs updates give epochs + 1 entries
    (fewer if early stopping triggers). Raises TrainingDivergedError with
    the offending epoch when the loss leaves the finite range.
    """
    cfg = config or BackpropConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    w = init_weights(topology, cfg.seed, half_width=cfg.init_half_width)
    with np.errstate(over="ignore", invalid="ignore"):
        history = [loss_mse(topology, w, X, y)]
        best = history[0]
        stale = 0
        for epoch in range(1, cfg.epochs + 1):
            w = w - cfg.learning_rate * gradient(topology, w, X, y)
            current = loss_mse(topology, w, X, y)
            if not math.isfinite(current):
                raise TrainingDivergedError(epoch, current)
            history.append(current)
            if cfg.early_stop_patience is not None:
                if current < best - cfg.early_stop_tol:
                    best = current
                    stale = 0
                else:
                    stale += 1
                    if stale >= cfg.early_stop_patience:
                        break
    return w, history


@dataclass
class TrainedModel:
    """A trained network bundled with its normalization and provenance.

    The model is self-contained: predictions in physical units need only
    the serialized file, not the training data.
    """

    topology: NetworkTopology
    weights: np.ndarray
    normalization: NormalizationSpec
    features: tuple[str, ...] = DEFAULT_FEATURES
    target: str = TARGET_FIELD
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        expected = parameter_count(self.topology)
        if self.weights.shape != (expected,):
            raise ValueError(f"weight vector has length {self.weights.size}, topology needs {expected}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weight vector contains non-finite entries")
        self.features = tuple(self.features)
        if len(self.features) != self.topology.input_size:
            raise ValueError(
                f"{len(self.features)} features do not match input size {self.topology.input_size}")
        missing = [f for f in (*self.features, self.target) if f not in self.normalization.ranges]
        if missing:
            raise ValueError(f"normalization spec lacks field(s): {', '.join(missing)}")

    def predict_normalized(self, X) -> np.ndarray:
        out = forward_batch(self.topology, self.weights, X)
        return out[:, 0] if self.topology.output_size == 1 else out

    def predict_records(self, records) -> np.ndarray:
        """Physical-unit predictions for a sequence of specimen records."""
        X = feature_matrix(records, self.features, self.normalization)
        return self.normalization.denormalize(self.target, self.predict_normalized(X))

    def predict_values(self, values: Mapping[str, float]) -> tuple[float, list[str]]:
        """Physical-unit prediction from raw named inputs.

        Returns the prediction and a list of extrapolation warnings for
        inputs outside the fitted normalization range.
        """
        missing = [f for f in self.features if f not in values]
        if missing:
            raise ValueError(f"missing feature: {missing[0]}")
        warnings = []
        x = np.empty(len(self.features))
        for j, name in enumerate(self.features):
            v = float(values[name])
            if not self.normalization.in_range(name, v):
                r = self.normalization.ranges[name]
                warnings.append(
                    f"{name}={v:g} outside training range [{r.x_min:g}, {r.x_max:g}]; extrapolating")
            x[j] = self.normalization.normalize(name, v)
        z = forward(self.topology, self.weights, x)
        return float(self.normalization.denormalize(self.target, z)), warnings


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "topology": model.topology.to_dict(),
        "features": list(model.features),
        "target": model.target,
        "weights": [float(w) for w in model.weights],
        "normalization": model.normalization.to_dict(),
        "provenance": model.provenance,
    }


def model_from_dict(data: Mapping) -> TrainedModel:
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a recognized model document (format={data.get('format')!r})")
    if data.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {data.get('version')!r}")
    return TrainedModel(
        topology=NetworkTopology.from_dict(data["topology"]),
        weights=np.asarray(data["weights"], dtype=float),
        normalization=NormalizationSpec.from_dict(data["normalization"]),
        features=tuple(data["features"]),
        target=data.get("target", TARGET_FIELD),
        provenance=dict(data.get("provenance", {})),
    )


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path) -> TrainedModel:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(data)
