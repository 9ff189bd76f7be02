"""Built-in classifiers: multinomial logistic regression and a 2-hidden-layer
MLP (100 and 50 rectifier units), trained with minibatch gradient descent.

Everything is plain numpy and deterministic under the model seed: weight
init, epoch shuffling and therefore the whole weight trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, Diverged
from .tensorfile import read_model, write_model

N_CLASSES = 3


@dataclass
class ModelSpec:
    kind: str                 # "linear" | "mlp"
    input_dim: int
    hidden: tuple[int, int] = (100, 50)
    classes: int = N_CLASSES
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.input_dim < 1 or self.classes < 2 or any(h < 1 for h in self.hidden):
            raise ValueError("dimensions must be positive")


@dataclass
class TrainConfig:
    optimizer: str = "adam"   # "sgd" | "momentum" | "adam"
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 50
    patience: int = 10        # early stop on validation macro F-score
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate > 0, epochs >= 1, batch_size >= 1 required")
        if self.optimizer not in ("sgd", "momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def _init_matrix(rng, fan_in, fan_out):
    # symmetric uniform scaled by fan-in
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class Classifier:
    """Base: a list of named parameter arrays plus forward/grad."""

    spec: ModelSpec
    params: dict[str, np.ndarray]

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.spec.input_dim:
            raise DimMismatch(f"expected {self.spec.input_dim} features, got {x.shape[1]}")
        return x

    def logits(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities; rows are non-negative and sum to one."""
        return softmax(self.logits(self._check_input(x)))

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Class indices 0..classes-1."""
        return np.argmax(self.logits(self._check_input(x)), axis=1)

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        """Mean cross-entropy; y holds class indices."""
        probs = self.forward(x)
        eps = 1e-300  # guards log(0) for fully saturated wrong predictions
        return float(-np.mean(np.log(probs[np.arange(len(y)), y] + eps)))

    def grad(self, x: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for k in self.params:
            self.params[k][...] = params[k]


class LinearModel(Classifier):
    """Multi-class logistic regression: one linear layer into a softmax."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.params = {
            "W": _init_matrix(rng, spec.input_dim, spec.classes),
            "b": np.zeros(spec.classes),
        }

    def logits(self, x):
        return x @ self.params["W"] + self.params["b"]

    def grad(self, x, y):
        x = self._check_input(x)
        if len(x) == 0:
            raise DimMismatch("empty batch")
        probs = softmax(self.logits(x))
        delta = probs
        delta[np.arange(len(y)), y] -= 1.0
        delta /= len(y)
        return {"W": x.T @ delta, "b": delta.sum(axis=0)}


class MLPModel(Classifier):
    """Two rectifier hidden layers, then a linear layer into a softmax."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        h1, h2 = spec.hidden
        self.params = {
            "W1": _init_matrix(rng, spec.input_dim, h1),
            "b1": np.zeros(h1),
            "W2": _init_matrix(rng, h1, h2),
            "b2": np.zeros(h2),
            "W3": _init_matrix(rng, h2, spec.classes),
            "b3": np.zeros(spec.classes),
        }

    def _hidden(self, x):
        p = self.params
        a1 = np.maximum(x @ p["W1"] + p["b1"], 0.0)
        a2 = np.maximum(a1 @ p["W2"] + p["b2"], 0.0)
        return a1, a2

    def logits(self, x):
        _, a2 = self._hidden(x)
        return a2 @ self.params["W3"] + self.params["b3"]

    def grad(self, x, y):
        x = self._check_input(x)
        if len(x) == 0:
            raise DimMismatch("empty batch")
        p = self.params
        a1, a2 = self._hidden(x)
        probs = softmax(a2 @ p["W3"] + p["b3"])
        delta = probs
        delta[np.arange(len(y)), y] -= 1.0
        delta /= len(y)
        d2 = (delta @ p["W3"].T) * (a2 > 0)
        d1 = (d2 @ p["W2"].T) * (a1 > 0)
        return {
            "W3": a2.T @ delta, "b3": delta.sum(axis=0),
            "W2": a1.T @ d2, "b2": d2.sum(axis=0),
            "W1": x.T @ d1, "b1": d1.sum(axis=0),
        }


def make_model(spec: ModelSpec) -> Classifier:
    return LinearModel(spec) if spec.kind == "linear" else MLPModel(spec)


def save_model(model: Classifier, path, extra: dict | None = None) -> None:
    """Checkpoint as a flat binary container of float32 parameter tensors.

    Parameters are rounded to float32 on disk; reload before computing any
    metrics you intend to reproduce later.
    """
    spec = model.spec
    header = {
        "kind": spec.kind,
        "input_dim": spec.input_dim,
        "hidden": list(spec.hidden),
        "classes": spec.classes,
        "seed": spec.seed,
    }
    if extra:
        header["extra"] = extra
    write_model(path, header, model.params)


def load_model(path) -> Classifier:
    header, params = read_model(path)
    spec = ModelSpec(
        kind=header["kind"],
        input_dim=header["input_dim"],
        hidden=tuple(header["hidden"]),
        classes=header["classes"],
        seed=header["seed"],
    )
    model = make_model(spec)
    model.set_params({k: v.astype(np.float64) for k, v in params.items()})
    return model


class _Optimizer:
    def __init__(self, cfg: TrainConfig, params):
        self.cfg = cfg
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()}
        self.second = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        cfg = self.cfg
        self.t += 1
        for k, g in grads.items():
            if cfg.optimizer == "sgd":
                params[k] -= cfg.learning_rate * g
            elif cfg.optimizer == "momentum":
                self.velocity[k] = cfg.momentum * self.velocity[k] - cfg.learning_rate * g
                params[k] += self.velocity[k]
            else:  # adam
                b1, b2, eps = 0.9, 0.999, 1e-8
                self.velocity[k] = b1 * self.velocity[k] + (1 - b1) * g
                self.second[k] = b2 * self.second[k] + (1 - b2) * g * g
                mhat = self.velocity[k] / (1 - b1 ** self.t)
                vhat = self.second[k] / (1 - b2 ** self.t)
                params[k] -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)


@dataclass
class TrainResult:
    model: Classifier
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f: float = -1.0


def _macro_f(preds: np.ndarray, y: np.ndarray, classes: int) -> float:
    # local to avoid importing the metrics module (keeps the oracle independent)
    total = 0.0
    for c in range(classes):
        tp = np.sum((preds == c) & (y == c))
        fp = np.sum((preds == c) & (y != c))
        fn = np.sum((preds != c) & (y == c))
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        total += 2 * p * r / (p + r) if p + r else 0.0
    return total / classes


def train(
    spec: ModelSpec,
    train_x: np.ndarray,
    train_y: np.ndarray,
    val_x: np.ndarray,
    val_y: np.ndarray,
    cfg: TrainConfig,
) -> TrainResult:
    """Minibatch training; returns the best-validation-F checkpoint."""
    model = make_model(spec)
    opt = _Optimizer(cfg, model.params)
    rng = np.random.default_rng(spec.seed)
    result = TrainResult(model=model)
    best_params = model.clone_params()
    since_best = 0
    n = len(train_x)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = model.grad(train_x[idx], train_y[idx])
            opt.step(model.params, grads)
        train_loss = model.loss(train_x, train_y)
        if not np.isfinite(train_loss):
            raise Diverged(f"non-finite loss at epoch {epoch}")
        val_f = _macro_f(model.predict(val_x), val_y, spec.classes)
        result.history.append({"epoch": epoch, "train_loss": train_loss, "val_macro_f": val_f})
        if val_f > result.best_val_f:
            result.best_val_f = val_f
            result.best_epoch = epoch
            best_params = model.clone_params()
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break
    model.set_params(best_params)
    return result
