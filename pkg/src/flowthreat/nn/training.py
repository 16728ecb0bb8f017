from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import ArgumentError, FormatError, ShapeError
from ..matrix import FeatureMatrix
from .network import (
    Network,
    loss_and_backward,
    loss_from_probs,
    predict,
    prepare_targets,
)
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    loss: str = "binary-ce"
    seed: int = 0
    patience: int | None = None
    dropout: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ArgumentError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ArgumentError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.dropout < 1.0:
            raise ArgumentError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.loss not in ("binary-ce", "categorical-ce"):
            raise ArgumentError(f"unknown loss {self.loss!r}")
        if self.patience is not None and self.patience < 1:
            raise ArgumentError(f"patience must be >= 1, got {self.patience}")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy")

    def __len__(self) -> int:
        return len(self.train_loss)

    def append(self, train_loss, train_acc, val_loss, val_acc) -> None:
        self.train_loss.append(float(train_loss))
        self.train_accuracy.append(float(train_acc))
        self.val_loss.append(float(val_loss))
        self.val_accuracy.append(float(val_acc))

    def rows(self):
        for i in range(len(self)):
            yield (i + 1, self.train_loss[i], self.train_accuracy[i], self.val_loss[i], self.val_accuracy[i])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([row[0], *(repr(v) for v in row[1:])])

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainingHistory":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != cls.COLUMNS:
            raise FormatError(f"{path}: not a training-history CSV")
        h = cls()
        for r in rows[1:]:
            h.append(*(float(v) for v in r[1:]))
        return h


def _targets_for(net: Network, m: FeatureMatrix) -> np.ndarray:
    if net.head == "softmax":
        if m.multiclass_labels is None:
            raise ShapeError("softmax head needs multiclass labels on the matrix")
        return prepare_targets(net, m.multiclass_labels)
    return prepare_targets(net, m.labels)


def evaluate(net: Network, m: FeatureMatrix) -> tuple[float, float]:
    """Infer-mode (loss, accuracy) on a whole matrix."""
    if m is None or m.n_rows == 0:
        return math.nan, math.nan
    T = _targets_for(net, m)
    probs = predict(net, m)
    loss = loss_from_probs(probs, T, net.head)
    if net.head == "sigmoid":
        acc = np.mean((probs[:, 0] >= 0.5) == (T[:, 0] == 1))
    else:
        acc = np.mean(probs.argmax(axis=1) == T.argmax(axis=1))
    return loss, float(acc)


def minibatches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    """Consecutive slices of ``order``; a trailing single row joins the previous
    batch so batch statistics are always defined."""
    batches = [order[i : i + batch_size] for i in range(0, order.size, batch_size)]
    if len(batches) > 1 and batches[-1].size == 1:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def train(
    net: Network,
    train_m: FeatureMatrix,
    val_m: FeatureMatrix | None,
    cfg: TrainConfig,
    log=None,
) -> tuple[Network, TrainingHistory]:
    """Minibatch Adam training.  The input network is not modified; the returned
    copy is in infer mode."""
    expected_loss = "binary-ce" if net.head == "sigmoid" else "categorical-ce"
    if cfg.loss != expected_loss:
        raise ArgumentError(f"loss {cfg.loss!r} does not match a {net.head} output layer")
    net = net.copy()
    net.metadata["train_config"] = cfg.to_dict()
    history = TrainingHistory()
    if train_m.n_rows == 0:
        raise ArgumentError("empty training matrix")
    if cfg.epochs == 0:
        net.mode = "infer"
        return net, history

    X = train_m.data
    T = _targets_for(net, train_m)
    keys = net.trainable()
    state = AdamState.zeros_like(net.get_arrays(keys))
    rng = np.random.default_rng(cfg.seed)
    best, stale = math.inf, 0
    for epoch in range(cfg.epochs):
        net.mode = "train"
        order = rng.permutation(X.shape[0])
        for idx in minibatches(order, cfg.batch_size):
            _, grads = loss_and_backward(net, X[idx], T[idx], cfg.dropout, rng, update_stats=True)
            params, state = adam_step(
                state, net.get_arrays(keys), grads,
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
            )
            net.set_arrays(keys, params)
        net.mode = "infer"
        tr = evaluate(net, train_m)
        va = evaluate(net, val_m)
        history.append(*tr, *va)
        if log is not None:
            log(f"epoch {epoch + 1}/{cfg.epochs} loss={tr[0]:.5f} acc={tr[1]:.4f} "
                f"val_loss={va[0]:.5f} val_acc={va[1]:.4f}")
        if cfg.patience is not None:
            if va[0] < best:
                best, stale = va[0], 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    net.mode = "infer"
    return net, history
