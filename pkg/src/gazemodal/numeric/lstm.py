"""Bidirectional LSTM over a sequence of feature vectors."""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from gazemodal.errors import DimensionError, EmptyInputError
from gazemodal.numeric.ops import add, affine, concat, mul, sigmoid, tanh
from gazemodal.numeric.tensor import ArrayLike, DifferentiableValue, constant


@dataclass
class LSTMWeights:
    """One direction: input weights ``W[4h, d]``, recurrent ``U[4h, h]``, bias ``b[4h]``.

    Gate blocks are ordered input, forget, candidate, output.
    """

    input_weights: DifferentiableValue
    recurrent_weights: DifferentiableValue
    bias: DifferentiableValue

    @property
    def hidden(self) -> int:
        return self.recurrent_weights.shape[1]

    @property
    def input_dim(self) -> int:
        return self.input_weights.shape[1]


def lstm_step(
    x: DifferentiableValue,
    h: DifferentiableValue,
    c: DifferentiableValue,
    weights: LSTMWeights,
) -> Tuple[DifferentiableValue, DifferentiableValue]:
    """One recurrence step; returns the new ``(h, c)``."""
    n = weights.hidden
    z = add(affine(x, weights.input_weights, weights.bias), affine(h, weights.recurrent_weights))
    i = sigmoid(z[..., 0:n])
    f = sigmoid(z[..., n : 2 * n])
    g = tanh(z[..., 2 * n : 3 * n])
    o = sigmoid(z[..., 3 * n : 4 * n])
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


def _run(seq: Sequence[DifferentiableValue], weights: LSTMWeights) -> DifferentiableValue:
    lead = seq[0].shape[:-1]
    h = constant(np.zeros((*lead, weights.hidden)))
    c = constant(np.zeros((*lead, weights.hidden)))
    for x in seq:
        h, c = lstm_step(x, h, c, weights)
    return h


def bilstm(
    seq: Sequence[ArrayLike],
    hidden: int,
    forward: LSTMWeights,
    backward: LSTMWeights,
) -> DifferentiableValue:
    """Concatenate the final hidden states of a forward and a backward pass.

    Elements are ``[d]`` vectors or ``[N, d]`` batches of equal-length sequences.
    """
    if not seq:
        raise EmptyInputError("bilstm needs a non-empty sequence")
    steps = [constant(x) for x in seq]
    width = steps[0].shape[-1]
    for t, x in enumerate(steps):
        if x.shape != steps[0].shape:
            raise DimensionError(f"step {t} has shape {x.shape}, expected {steps[0].shape}", axis=t)
    for direction in (forward, backward):
        if direction.hidden != hidden:
            raise DimensionError(f"weights carry hidden size {direction.hidden}, expected {hidden}", axis="hidden")
        if direction.input_dim != width:
            raise DimensionError(f"weights expect input width {direction.input_dim}, got {width}", axis=-1)

    return concat([_run(steps, forward), _run(steps[::-1], backward)], axis=-1)
