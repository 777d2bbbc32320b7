"""Dense differentiable models: multinomial logistic regression and MLPs.

Everything is float64 and built on 2-D row-major numpy arrays. Parameters and
gradients live in :class:`ParameterSet`, an ordered, named list of arrays,
so optimizers can treat any model as a flat list. The backward pass is
hand-derived for the dense/relu/softmax stack; no general autodiff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigError, DataError, NumericError, ShapeError

LOGISTIC_REGRESSION = "logistic_regression"
MLP = "mlp"

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description.

    ``layer_widths`` runs from the feature dimension to the class count, so a
    3-layer MLP on 784 features with 10 classes is ``[784, 256, 128, 10]``.
    Logistic regression is the single-layer case and must have exactly two
    widths.
    """

    kind: str = MLP
    layer_widths: tuple[int, ...] = (784, 256, 128, 10)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(
            self, "layer_widths", tuple(int(w) for w in self.layer_widths)
        )
        if self.kind not in (LOGISTIC_REGRESSION, MLP):
            raise ConfigError(f"model.kind: unknown kind {self.kind!r}")
        if len(self.layer_widths) < 2:
            raise ConfigError("model.layer_widths: need at least [features, classes]")
        if self.kind == LOGISTIC_REGRESSION and len(self.layer_widths) != 2:
            raise ConfigError(
                "model.layer_widths: logistic_regression takes exactly "
                f"[features, classes], got {self.layer_widths}"
            )
        if any(int(w) <= 0 for w in self.layer_widths):
            raise ConfigError(f"model.layer_widths: zero-width layer in {self.layer_widths}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(
                f"model.activation: {self.activation!r} not in {_ACTIVATIONS}"
            )

    @property
    def n_features(self) -> int:
        return int(self.layer_widths[0])

    @property
    def n_classes(self) -> int:
        return int(self.layer_widths[-1])

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


@dataclass
class ParameterSet:
    """Ordered, named collection of float64 matrices.

    Order is fixed at construction (``w0, b0, w1, b1, ...``) and is the
    contract between models and optimizers. The same container carries
    gradients; see :data:`GradientSet`.
    """

    names: tuple[str, ...]
    arrays: list[np.ndarray]

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(zip(self.names, self.arrays))

    def __len__(self) -> int:
        return len(self.arrays)

    def copy(self) -> "ParameterSet":
        return ParameterSet(self.names, [a.copy() for a in self.arrays])

    def shapes(self) -> list[tuple[int, ...]]:
        return [a.shape for a in self.arrays]

    def n_values(self) -> int:
        return sum(a.size for a in self.arrays)

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(a * a)) for a in self.arrays))


# Gradients use the same container as parameters, shape-congruent entry by
# entry and in the same order.
GradientSet = ParameterSet


@dataclass
class Batch:
    """One training step's worth of data: features, labels, and the id of the
    source the rows came from (-1 for source-less evaluation data)."""

    x: np.ndarray
    y: np.ndarray
    source: int = -1

    def __len__(self) -> int:
        return self.x.shape[0]


def check_congruent(params: ParameterSet, grads: GradientSet) -> None:
    """Raise ShapeError unless grads matches params entry for entry."""
    if len(params) != len(grads) or params.shapes() != grads.shapes():
        raise ShapeError(
            f"gradient shapes {grads.shapes()} do not match parameter shapes "
            f"{params.shapes()}"
        )


def _require_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(a).all():
        raise NumericError(f"{what} contains non-finite values")
    return a


def init_params(spec: ModelSpec, rng: np.random.Generator) -> ParameterSet:
    """Initialize parameters for ``spec``.

    Weights are uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases
    are zero rows. Drawing order is layer by layer, so a fixed seed gives
    bit-identical parameters on every call.
    """
    names: list[str] = []
    arrays: list[np.ndarray] = []
    widths = spec.layer_widths
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        a = math.sqrt(6.0 / (fan_in + fan_out))
        names.append(f"w{i}")
        arrays.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        names.append(f"b{i}")
        arrays.append(np.zeros((1, fan_out)))
    return ParameterSet(tuple(names), arrays)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return (z > 0.0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


def _check_input(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.n_features:
        raise ShapeError(
            f"input has shape {x.shape}, model expects (*, {spec.n_features})"
        )
    return x


def _forward_cached(params: ParameterSet, spec: ModelSpec, x: np.ndarray):
    """Forward pass keeping pre-activations and activations for backprop."""
    n_layers = spec.n_layers
    if len(params) != 2 * n_layers:
        raise ShapeError(
            f"parameter count {len(params)} does not match {n_layers}-layer model"
        )
    pre: list[np.ndarray] = []
    act: list[np.ndarray] = [x]
    h = x
    # divergence is reported as NumericError by the finite checks, not as
    # numpy overflow warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_layers):
            w, b = params.arrays[2 * i], params.arrays[2 * i + 1]
            if w.shape != (spec.layer_widths[i], spec.layer_widths[i + 1]):
                raise ShapeError(
                    f"w{i} has shape {w.shape}, expected "
                    f"{(spec.layer_widths[i], spec.layer_widths[i + 1])}"
                )
            z = h @ w + b
            pre.append(z)
            h = _activate(z, spec.activation) if i < n_layers - 1 else z
            act.append(h)
    return pre, act


def forward(params: ParameterSet, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Class logits for each input row; shape (n_rows, n_classes)."""
    x = _check_input(spec, x)
    _, act = _forward_cached(params, spec, x)
    return _require_finite(act[-1], "logits")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels ``y`` under ``logits``."""
    y = _check_labels(y, logits.shape[1])
    logp = log_softmax(logits)
    return float(-logp[np.arange(len(y)), y].mean())


def _check_labels(y: np.ndarray, n_classes: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"labels must be a 1-D vector, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        raise DataError(f"labels must be integers, got dtype {y.dtype}")
    if len(y) and (y.min() < 0 or y.max() >= n_classes):
        raise DataError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    return y.astype(np.int64, copy=False)


def loss_and_backward(
    params: ParameterSet, spec: ModelSpec, batch: Batch
) -> tuple[float, GradientSet]:
    """Mean cross-entropy of the batch and its gradient w.r.t. every parameter.

    The softmax is applied internally, so the model's forward output stays in
    logit space. Returned gradients are shape-congruent with ``params``.
    """
    x = _check_input(spec, batch.x)
    y = _check_labels(batch.y, spec.n_classes)
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"batch has {x.shape[0]} rows but {y.shape[0]} labels")
    if x.shape[0] == 0:
        raise DataError("empty batch")

    pre, act = _forward_cached(params, spec, x)
    logits = _require_finite(act[-1], "logits")
    logp = log_softmax(logits)
    n = x.shape[0]
    loss = float(-logp[np.arange(n), y].mean())
    if not math.isfinite(loss):
        raise NumericError("loss is non-finite")

    # d loss / d logits = (softmax - onehot) / n
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads: list[np.ndarray] = [np.empty(0)] * len(params)
    for i in range(spec.n_layers - 1, -1, -1):
        grads[2 * i] = act[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0, keepdims=True)
        if i > 0:
            delta = (delta @ params.arrays[2 * i].T) * _activate_grad(
                pre[i - 1], spec.activation
            )
    return loss, GradientSet(params.names, grads)


def predict(params: ParameterSet, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Argmax class per row."""
    return forward(params, spec, x).argmax(axis=1)


def evaluate(
    params: ParameterSet, spec: ModelSpec, x: np.ndarray, y: np.ndarray
) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) of the model on ``(x, y)``."""
    logits = forward(params, spec, x)
    y = _check_labels(y, spec.n_classes)
    loss = cross_entropy(logits, y)
    accuracy = float((logits.argmax(axis=1) == y).mean())
    return loss, accuracy
