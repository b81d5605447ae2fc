"""Seeded parameter initialization."""

from typing import Sequence, Tuple

import numpy as np


def fans(shape: Sequence[int]) -> Tuple[int, int]:
    """Fan-in and fan-out of a dense ``[out, in]`` or conv ``[out, in, kh, kw]`` weight."""
    if len(shape) == 2:
        return shape[1], shape[0]
    receptive = int(np.prod(shape[2:]))
    return shape[1] * receptive, shape[0] * receptive


def glorot_uniform(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    """Uniform(-a, a) with ``a = sqrt(6 / (fan_in + fan_out))``."""
    fan_in, fan_out = fans(shape)
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=tuple(shape))
