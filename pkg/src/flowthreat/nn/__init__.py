"""Feedforward network with batch normalization, trained by minibatch Adam."""

from .classifier import FlowNetClassifier, hidden_stack_specs
from .gradcheck import gradient_check, numeric_gradients
from .layers import Activation, BatchNorm, Dense, LayerSpec
from .network import (
    Network,
    build_network,
    count_params,
    forward,
    layer_param_counts,
    loss_and_backward,
    reference_layer_specs,
    predict,
    predict_scores,
)
from .optim import AdamState, adam_step
from .serialize import load_model, save_model
from .training import TrainConfig, TrainingHistory, train

__all__ = [
    "Activation", "AdamState", "BatchNorm", "Dense", "FlowNetClassifier", "LayerSpec",
    "Network", "TrainConfig", "TrainingHistory", "adam_step", "build_network",
    "count_params", "forward", "gradient_check", "hidden_stack_specs", "layer_param_counts",
    "load_model", "loss_and_backward", "numeric_gradients", "reference_layer_specs", "predict",
    "predict_scores", "save_model", "train",
]
