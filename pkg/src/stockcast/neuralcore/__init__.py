"""From-scratch recurrent network core (numpy, float64)."""

from .adam import OptimizerState, adam_init, adam_step
from .cells import gru_cell_forward, lstm_cell_forward, sigmoid
from .gradcheck import analytic_gradient, max_relative_error, numeric_gradient
from .network import (
    ADDITIONAL_LAYERS,
    ModelSpec,
    NetworkState,
    backward,
    dropout_masks,
    forward,
    init_network,
    mse_loss,
    param_shapes,
    predict,
    rmse,
)

__all__ = [
    "ADDITIONAL_LAYERS",
    "ModelSpec",
    "NetworkState",
    "OptimizerState",
    "adam_init",
    "adam_step",
    "analytic_gradient",
    "backward",
    "dropout_masks",
    "forward",
    "gru_cell_forward",
    "init_network",
    "lstm_cell_forward",
    "max_relative_error",
    "mse_loss",
    "numeric_gradient",
    "param_shapes",
    "predict",
    "rmse",
    "sigmoid",
]
