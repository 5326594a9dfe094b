"""Minimal numpy neural-network engine with backpropagation through time."""

from .activations import ACTIVATIONS, activate, activate_grad
from .network import (
    CELL_TYPES,
    RECURRENT_KINDS,
    CellTrace,
    LayerSpec,
    Model,
    NetworkConfig,
    backward,
    build_config,
    dense_forward,
    flatten_params,
    forward_sequence,
    gru_step,
    init_params,
    loss_and_gradients,
    lstm_step,
    mse_loss,
    simple_rnn_step,
    tree_map,
)
from .optim import AdamState, adam_update, init_adam
from .serialize import load_model, save_model
from .training import TrainConfig, TrainerState, TrainingHistory, train

__all__ = [
    "ACTIVATIONS",
    "activate",
    "activate_grad",
    "CELL_TYPES",
    "RECURRENT_KINDS",
    "CellTrace",
    "LayerSpec",
    "Model",
    "NetworkConfig",
    "backward",
    "build_config",
    "dense_forward",
    "flatten_params",
    "forward_sequence",
    "gru_step",
    "init_params",
    "loss_and_gradients",
    "lstm_step",
    "mse_loss",
    "simple_rnn_step",
    "tree_map",
    "AdamState",
    "adam_update",
    "init_adam",
    "load_model",
    "save_model",
    "TrainConfig",
    "TrainerState",
    "TrainingHistory",
    "train",
]
