"""Minimal reverse-mode differentiable array engine."""

from gazemodal.numeric.gradcheck import finite_diff_check
from gazemodal.numeric.lstm import LSTMWeights, bilstm
from gazemodal.numeric.ops import (
    activation,
    affine,
    conv2d,
    cross_entropy_loss,
    max_pool2d,
    mse_loss,
    softmax,
    upsample_nearest,
)
from gazemodal.numeric.optim import Adam, AdamState, adam_step
from gazemodal.numeric.tensor import DifferentiableValue, constant, parameter, reverse_sweep

__all__ = [
    "Adam",
    "AdamState",
    "DifferentiableValue",
    "LSTMWeights",
    "activation",
    "adam_step",
    "affine",
    "bilstm",
    "constant",
    "conv2d",
    "cross_entropy_loss",
    "finite_diff_check",
    "max_pool2d",
    "mse_loss",
    "parameter",
    "reverse_sweep",
    "softmax",
    "upsample_nearest",
]
