"""Layer kinds: dense, batch normalization and elementwise activations.

Layers are functional: ``forward`` returns the output and a cache that
``backward`` consumes, so inference never writes to the layer.  The only
forward-time mutation is the batch-norm moving-statistics update, and only
when asked for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rowwise import rowwise_product
from ..exceptions import SpecError, TrainModeError

ACTIVATIONS = ("relu", "sigmoid", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_width: int | None = None
    out_width: int | None = None
    width: int | None = None
    activation: str | None = None
    momentum: float = 0.99
    epsilon: float = 1e-3

    @classmethod
    def dense(cls, in_width: int, out_width: int) -> "LayerSpec":
        return cls("dense", in_width=in_width, out_width=out_width)

    @classmethod
    def batchnorm(cls, width: int, momentum: float = 0.99, epsilon: float = 1e-3) -> "LayerSpec":
        return cls("batchnorm", width=width, momentum=momentum, epsilon=epsilon)

    @classmethod
    def act(cls, name: str) -> "LayerSpec":
        return cls("activation", activation=name)

    def validate(self) -> None:
        if self.kind == "dense":
            if not (_positive(self.in_width) and _positive(self.out_width)):
                raise SpecError(f"dense layer needs positive widths, got {self}")
        elif self.kind == "batchnorm":
            if not _positive(self.width):
                raise SpecError(f"batchnorm layer needs a positive width, got {self}")
            if not 0.0 <= self.momentum < 1.0 or self.epsilon < 0:
                raise SpecError(f"bad batchnorm constants in {self}")
        elif self.kind == "activation":
            if self.activation not in ACTIVATIONS:
                raise SpecError(f"unknown activation {self.activation!r}")
        else:
            raise SpecError(f"unknown layer kind {self.kind!r}")


def _positive(v) -> bool:
    return isinstance(v, (int, np.integer)) and v > 0


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


class Dense:
    kind = "dense"
    trainable_names = ("weight", "bias")

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    @property
    def in_width(self) -> int:
        return self.weight.shape[1]

    @property
    def out_width(self) -> int:
        return self.weight.shape[0]

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec.dense(self.in_width, self.out_width)

    def param_counts(self) -> tuple[int, int]:
        n = self.weight.size + self.bias.size
        return n, 0

    def forward(self, x, training=False, update_stats=False):
        # row-independent arithmetic: scoring one record matches batch scoring
        return rowwise_product(x, self.weight) + self.bias, x

    def backward(self, dy, cache):
        x = cache
        return dy @ self.weight, {"weight": dy.T @ x, "bias": dy.sum(axis=0)}


class BatchNorm:
    kind = "batchnorm"
    trainable_names = ("gamma", "beta")

    def __init__(self, gamma, beta, moving_mean, moving_var, momentum=0.99, epsilon=1e-3):
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        self.moving_mean = np.asarray(moving_mean, dtype=np.float64)
        self.moving_var = np.asarray(moving_var, dtype=np.float64)
        self.momentum = float(momentum)
        self.epsilon = float(epsilon)

    @classmethod
    def fresh(cls, width: int, momentum=0.99, epsilon=1e-3) -> "BatchNorm":
        return cls(np.ones(width), np.zeros(width), np.zeros(width), np.ones(width), momentum, epsilon)

    @property
    def width(self) -> int:
        return self.gamma.shape[0]

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec.batchnorm(self.width, self.momentum, self.epsilon)

    def param_counts(self) -> tuple[int, int]:
        w = self.width
        return 2 * w, 2 * w

    def normalize(self, x, training=False, update_stats=False):
        """Pre-affine standardized values and the per-feature inverse std."""
        if training:
            n = x.shape[0]
            if n < 2:
                raise TrainModeError("batch normalization needs at least 2 rows in train mode")
            mean = x.mean(axis=0)
            var = ((x - mean) ** 2).mean(axis=0)
            if update_stats:
                m = self.momentum
                self.moving_mean = m * self.moving_mean + (1 - m) * mean
                self.moving_var = m * self.moving_var + (1 - m) * var
        else:
            mean, var = self.moving_mean, self.moving_var
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        return (x - mean) * inv_std, inv_std

    def forward(self, x, training=False, update_stats=False):
        xhat, inv_std = self.normalize(x, training, update_stats)
        return self.gamma * xhat + self.beta, (xhat, inv_std, training)

    def backward(self, dy, cache):
        xhat, inv_std, training = cache
        grads = {"gamma": (dy * xhat).sum(axis=0), "beta": dy.sum(axis=0)}
        dxhat = dy * self.gamma
        if not training:
            return dxhat * inv_std, grads
        n = dy.shape[0]
        dx = (inv_std / n) * (
            n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
        )
        return dx, grads


class Activation:
    kind = "activation"
    trainable_names = ()

    def __init__(self, name: str):
        if name not in ACTIVATIONS:
            raise SpecError(f"unknown activation {name!r}")
        self.name = name

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec.act(self.name)

    def param_counts(self) -> tuple[int, int]:
        return 0, 0

    def forward(self, x, training=False, update_stats=False):
        if self.name == "relu":
            return np.maximum(x, 0.0), x
        y = sigmoid(x) if self.name == "sigmoid" else softmax(x)
        return y, y

    def backward(self, dy, cache):
        if self.name == "relu":
            return dy * (cache > 0), {}
        y = cache
        if self.name == "sigmoid":
            return dy * y * (1.0 - y), {}
        return y * (dy - (dy * y).sum(axis=1, keepdims=True)), {}
