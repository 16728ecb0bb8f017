from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..exceptions import ShapeError, SpecError
from ..matrix import FeatureMatrix
from .layers import Activation, BatchNorm, Dense, LayerSpec

PROB_CLAMP = 1e-12


@dataclass
class Network:
    layers: list
    seed: int = 0
    mode: str = "train"
    feature_names: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]

    @property
    def input_width(self) -> int:
        for layer in self.layers:
            if isinstance(layer, Dense):
                return layer.in_width
            if isinstance(layer, BatchNorm):
                return layer.width
        raise SpecError("network has no layer with a defined width")

    @property
    def output_width(self) -> int:
        width = None
        for layer in self.layers:
            if isinstance(layer, Dense):
                width = layer.out_width
            elif isinstance(layer, BatchNorm):
                width = layer.width
        return width

    @property
    def head(self) -> str | None:
        last = self.layers[-1] if self.layers else None
        return last.name if isinstance(last, Activation) else None

    def trainable(self) -> list[tuple[int, str]]:
        """(layer index, attribute) for each trainable array, in layer order."""
        return [(i, name) for i, layer in enumerate(self.layers) for name in layer.trainable_names]

    def get_arrays(self, keys) -> list[np.ndarray]:
        return [getattr(self.layers[i], name) for i, name in keys]

    def set_arrays(self, keys, arrays) -> None:
        for (i, name), arr in zip(keys, arrays):
            setattr(self.layers[i], name, arr)

    def copy(self) -> "Network":
        return copy.deepcopy(self)


def build_network(specs: Sequence[LayerSpec], seed: int = 0) -> Network:
    """Instantiate layers; dense weights are uniform in +-sqrt(6 / in_width)."""
    if not specs:
        raise SpecError("empty layer list")
    rng = np.random.default_rng(seed)
    layers = []
    width = None
    for pos, spec in enumerate(specs):
        spec.validate()
        if spec.kind == "dense":
            if width is not None and spec.in_width != width:
                raise SpecError(
                    f"layer {pos}: dense expects input width {spec.in_width}, previous layer gives {width}"
                )
            limit = np.sqrt(6.0 / spec.in_width)
            weight = rng.uniform(-limit, limit, size=(spec.out_width, spec.in_width))
            layers.append(Dense(weight, np.zeros(spec.out_width)))
            width = spec.out_width
        elif spec.kind == "batchnorm":
            if width is not None and spec.width != width:
                raise SpecError(
                    f"layer {pos}: batchnorm width {spec.width}, previous layer gives {width}"
                )
            layers.append(BatchNorm.fresh(spec.width, spec.momentum, spec.epsilon))
            width = spec.width
        else:
            layers.append(Activation(spec.activation))
    if width is None:
        raise SpecError("network has no dense or batchnorm layer")
    return Network(layers, seed=seed)


def reference_layer_specs(input_width: int = 20, output_width: int = 11) -> list[LayerSpec]:
    """dense 25 -> dense 18 -> batchnorm -> dense 12 -> batchnorm -> head."""
    head = "sigmoid" if output_width == 1 else "softmax"
    return [
        LayerSpec.dense(input_width, 25), LayerSpec.act("relu"),
        LayerSpec.dense(25, 18), LayerSpec.act("relu"),
        LayerSpec.batchnorm(18),
        LayerSpec.dense(18, 12), LayerSpec.act("relu"),
        LayerSpec.batchnorm(12),
        LayerSpec.dense(12, output_width), LayerSpec.act(head),
    ]


def layer_param_counts(net: Network) -> list[int]:
    return [sum(layer.param_counts()) for layer in net.layers]


def count_params(net: Network) -> tuple[int, int, int]:
    """(total, trainable, non_trainable)."""
    trainable = sum(layer.param_counts()[0] for layer in net.layers)
    frozen = sum(layer.param_counts()[1] for layer in net.layers)
    return trainable + frozen, trainable, frozen


def _as_array(batch) -> np.ndarray:
    X = batch.data if isinstance(batch, FeatureMatrix) else np.asarray(batch, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"batch must be 2-D, got shape {X.shape}")
    return X


def forward(
    net: Network,
    batch,
    training: bool | None = None,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    update_stats: bool = True,
):
    """Run the layer stack.

    Returns ``(activations, caches, output)``; ``activations[0]`` is the input.
    Dropout, when ``dropout > 0`` and training, follows every hidden activation.
    """
    X = _as_array(batch)
    if X.shape[1] != net.input_width:
        raise ShapeError(f"batch has {X.shape[1]} columns, network expects {net.input_width}")
    training = net.mode == "train" if training is None else training
    use_dropout = training and dropout > 0.0
    if use_dropout and rng is None:
        raise ValueError("dropout needs an rng")
    last = len(net.layers) - 1
    activations, caches = [X], []
    h = X
    for i, layer in enumerate(net.layers):
        h, cache = layer.forward(h, training, update_stats and training)
        mask = None
        if use_dropout and isinstance(layer, Activation) and i != last:
            mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
            h = h * mask
        caches.append((cache, mask))
        activations.append(h)
    return activations, caches, h


def loss_from_probs(probs: np.ndarray, targets: np.ndarray, head: str) -> float:
    p = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if head == "sigmoid":
        return float(-np.mean(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)))
    return float(-np.mean(np.sum(targets * np.log(p), axis=1)))


def prepare_targets(net: Network, targets) -> np.ndarray:
    """Column vector for a sigmoid head, one-hot rows for a softmax head."""
    t = np.asarray(targets)
    width = net.output_width
    if net.head == "sigmoid":
        t = t.astype(np.float64).reshape(-1, 1)
        if width != 1:
            raise ShapeError(f"sigmoid head must have width 1, has {width}")
        return t
    if net.head == "softmax":
        if t.ndim == 1:
            t = t.astype(np.int64)
            if t.size and (t.min() < 0 or t.max() >= width):
                raise ShapeError(f"class index out of range for head width {width}")
            return np.eye(width)[t]
        if t.shape[1] != width:
            raise ShapeError(f"targets have {t.shape[1]} columns, head has {width}")
        return t.astype(np.float64)
    raise SpecError("cross-entropy needs a sigmoid or softmax output layer")


def loss_and_backward(
    net: Network,
    batch,
    targets,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    update_stats: bool = False,
):
    """Train-mode forward plus reverse pass.

    Returns ``(loss, grads)`` with ``grads`` aligned to ``net.trainable()``.
    Binary CE pairs with a sigmoid head, categorical CE with softmax; for
    both the gradient at the logits is ``(p - y) / n``.
    """
    T = prepare_targets(net, targets)
    _, caches, probs = forward(net, batch, True, dropout, rng, update_stats)
    if T.shape[0] != probs.shape[0]:
        raise ShapeError(f"{T.shape[0]} targets for {probs.shape[0]} rows")
    loss = loss_from_probs(probs, T, net.head)
    n = probs.shape[0]
    grad = (probs - T) / n
    per_layer: dict[int, dict] = {}
    for i in range(len(net.layers) - 2, -1, -1):
        cache, mask = caches[i]
        if mask is not None:
            grad = grad * mask
        grad, g = net.layers[i].backward(grad, cache)
        per_layer[i] = g
    grads = [per_layer[i][name] for i, name in net.trainable()]
    return loss, grads


def predict(net: Network, m) -> np.ndarray:
    """Infer-mode scores, ``(n, 1)`` for a sigmoid head or ``(n, classes)``."""
    X = _as_array(m)
    if X.shape[1] != net.input_width:
        raise ShapeError(f"input has {X.shape[1]} columns, network expects {net.input_width}")
    h = X
    for layer in net.layers:
        h, _ = layer.forward(h, False, False)
    return h


def predict_scores(net: Network, m) -> np.ndarray:
    """One attack score per row: the sigmoid output, or 1 - P(normal) for softmax heads."""
    out = predict(net, m)
    if out.shape[1] == 1:
        return out[:, 0]
    return 1.0 - out[:, 0]
