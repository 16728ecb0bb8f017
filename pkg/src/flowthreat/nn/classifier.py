from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_matrix_and_labels, check_width
from ..exceptions import ArgumentError
from ..matrix import FeatureMatrix
from .layers import LayerSpec
from .network import build_network, predict
from .training import TrainConfig, train


def hidden_stack_specs(input_width, hidden, batchnorm_after, output_width):
    """dense+relu per hidden width, a batchnorm after the listed hidden layers, then the head."""
    specs, width = [], input_width
    for i, h in enumerate(hidden):
        specs += [LayerSpec.dense(width, h), LayerSpec.act("relu")]
        if i in batchnorm_after:
            specs.append(LayerSpec.batchnorm(h))
        width = h
    head = "sigmoid" if output_width == 1 else "softmax"
    return specs + [LayerSpec.dense(width, output_width), LayerSpec.act(head)]


class FlowNetClassifier(ClassifierMixin, BaseEstimator):
    """Feedforward classifier with batch normalization, trained by minibatch Adam.

    The defaults reproduce the reference layout: hidden widths 25, 18, 12 with
    batch normalization after the second and third hidden layers.  Two classes
    get a one-unit sigmoid head; more get a softmax head.

    Parameters
    ----------
    hidden : tuple of int, default=(25, 18, 12)
    batchnorm_after : tuple of int, default=(1, 2)
        Indices into ``hidden`` followed by a batch-normalization layer.
    epochs, batch_size, learning_rate, beta1, beta2, epsilon, patience, dropout
        Forwarded to :class:`TrainConfig`.
    random_state : int, default=0
        Seeds weight initialization and minibatch shuffling.

    Attributes
    ----------
    network_ : Network
    history_ : TrainingHistory
    classes_ : ndarray
    """

    def __init__(
        self,
        hidden=(25, 18, 12),
        batchnorm_after=(1, 2),
        epochs=30,
        batch_size=256,
        learning_rate=1e-3,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        patience=None,
        dropout=0.0,
        random_state=0,
    ):
        self.hidden = hidden
        self.batchnorm_after = batchnorm_after
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.patience = patience
        self.dropout = dropout
        self.random_state = random_state

    def fit(self, X, y=None, validation_data=None):
        X, y = check_matrix_and_labels(X, y)
        self.classes_ = unique_labels(y)
        if self.classes_.size < 2:
            raise ArgumentError("need at least two classes to fit")
        self.n_features_in_ = X.shape[1]
        codes = np.searchsorted(self.classes_, y)
        binary = self.classes_.size == 2
        out = 1 if binary else self.classes_.size
        specs = hidden_stack_specs(X.shape[1], self.hidden, set(self.batchnorm_after), out)
        cfg = TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon,
            loss="binary-ce" if binary else "categorical-ce",
            seed=self.random_state, patience=self.patience, dropout=self.dropout,
        )
        train_m = self._as_matrix(X, codes, binary)
        val_m = None
        if validation_data is not None:
            Xv, yv = check_matrix_and_labels(*validation_data)
            val_m = self._as_matrix(Xv, np.searchsorted(self.classes_, yv), binary)
        net = build_network(specs, self.random_state)
        self.network_, self.history_ = train(net, train_m, val_m, cfg)
        return self

    @staticmethod
    def _as_matrix(X, codes, binary):
        names = [f"x{j}" for j in range(X.shape[1])]
        if binary:
            return FeatureMatrix(X, names, codes)
        return FeatureMatrix(X, names, (codes > 0).astype(int), codes)

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = check_matrix(X)
        check_width(X, self.n_features_in_)
        out = predict(self.network_, X)
        if out.shape[1] == 1:
            return np.hstack([1.0 - out, out])
        return out

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
