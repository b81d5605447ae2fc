"""Adam optimizer."""

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from gazemodal.config import settings
from gazemodal.errors import DimensionError
from gazemodal.numeric.tensor import DifferentiableValue


@dataclass
class AdamState:
    """Moment buffers and hyperparameters for one parameter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = field(default_factory=lambda: settings.lr)
    beta1: float = field(default_factory=lambda: settings.beta1)
    beta2: float = field(default_factory=lambda: settings.beta2)
    epsilon: float = field(default_factory=lambda: settings.epsilon)

    @classmethod
    def for_parameter(cls, param: DifferentiableValue, **hyper: float) -> "AdamState":
        return cls(m=np.zeros_like(param.value), v=np.zeros_like(param.value), **hyper)


def adam_step(param: DifferentiableValue, state: AdamState) -> None:
    """Bias-corrected Adam update in place, then zero ``param.grad``."""
    if state.m.shape != param.shape:
        raise DimensionError(f"moment buffer {state.m.shape} does not match parameter {param.shape}", axis=0)
    grad = param.grad
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    param.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    param.zero_grad()


class Adam:
    """Adam over a named parameter set."""

    def __init__(self, params: Mapping[str, DifferentiableValue], **hyper: float):
        self.params = params
        self.states: Dict[str, AdamState] = {
            name: AdamState.for_parameter(param, **hyper) for name, param in params.items()
        }

    def step(self) -> None:
        for name, param in self.params.items():
            adam_step(param, self.states[name])

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
