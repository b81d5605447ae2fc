"""Finite-difference verification of reverse-mode gradients."""

from typing import Callable, Iterable, Mapping, Union

import numpy as np

from gazemodal.errors import ArgumentError
from gazemodal.numeric.tensor import DifferentiableValue, reverse_sweep

Params = Union[Mapping[str, DifferentiableValue], Iterable[DifferentiableValue]]


def finite_diff_check(
    f: Callable[[], DifferentiableValue],
    params: Params,
    h: float = 1e-5,
) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` rebuilds the scalar loss from the current parameter values on every call.
    Per coordinate the error is ``|a - cd| / max(|a|, |cd|, 1e-8)``.
    """
    if h <= 0:
        raise ArgumentError(f"step h must be positive, got {h}")
    leaves = list(params.values()) if isinstance(params, Mapping) else list(params)

    for leaf in leaves:
        leaf.zero_grad()
    reverse_sweep(f())
    analytic = [leaf.grad.copy() for leaf in leaves]
    for leaf in leaves:
        leaf.zero_grad()

    worst = 0.0
    for leaf, grad in zip(leaves, analytic):
        flat = leaf.value.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = f().item()
            flat[i] = original - h
            minus = f().item()
            flat[i] = original
            estimate = (plus - minus) / (2.0 * h)
            denom = max(abs(grad_flat[i]), abs(estimate), 1e-8)
            worst = max(worst, abs(grad_flat[i] - estimate) / denom)
    return worst
