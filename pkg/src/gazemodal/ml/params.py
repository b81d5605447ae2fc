"""Named, seeded parameter sets for every architecture."""

from typing import Dict, List, Tuple

import numpy as np

from gazemodal.config import derive_seed
from gazemodal.core.models import ArchitectureId, Modality, ModelConfig
from gazemodal.numeric.init import glorot_uniform
from gazemodal.numeric.tensor import DifferentiableValue, parameter

N_CLASSES = 3
KERNEL = 3

Params = Dict[str, DifferentiableValue]
Spec = List[Tuple[str, Tuple[int, ...]]]


def _conv(name: str, c_out: int, c_in: int, k: int = KERNEL) -> Spec:
    return [(f"{name}.w", (c_out, c_in, k, k)), (f"{name}.b", (c_out,))]


def _dense(name: str, n_out: int, n_in: int) -> Spec:
    return [(f"{name}.w", (n_out, n_in)), (f"{name}.b", (n_out,))]


def _lstm(name: str, hidden: int, n_in: int) -> Spec:
    return [
        (f"{name}.W", (4 * hidden, n_in)),
        (f"{name}.U", (4 * hidden, hidden)),
        (f"{name}.b", (4 * hidden,)),
    ]


def image_encoder_spec(config: ModelConfig) -> Spec:
    spec: Spec = []
    c_in = 1
    for block, width in enumerate(config.channels):
        spec += _conv(f"enc{block}.conv1", width, c_in)
        spec += _conv(f"enc{block}.conv2", width, width)
        c_in = width
    spec += _dense("img.fc", config.dense_width, config.channels[-1])
    return spec


def decoder_widths(config: ModelConfig) -> List[int]:
    """Output channels of each decoder block, deepest first."""
    widths = list(config.channels)
    return widths[-2::-1] + [widths[0]]


def decoder_spec(config: ModelConfig) -> Spec:
    spec: Spec = []
    skips = list(config.channels)[::-1]
    c_in = config.channels[-1]
    for block, width in enumerate(decoder_widths(config)):
        spec += _conv(f"dec{block}.conv", width, c_in + skips[block])
        c_in = width
    spec += _conv("dec.out", 1, c_in, k=1)
    return spec


def temporal_encoder_spec(config: ModelConfig) -> Spec:
    spec: Spec = []
    c_in = 1
    for block, width in enumerate(config.frame_channels):
        spec += _conv(f"frame{block}.conv", width, c_in)
        c_in = width
    spec += _dense("frame.fc", config.frame_features, c_in)
    spec += _lstm("lstm.fwd", config.lstm_hidden, config.frame_features)
    spec += _lstm("lstm.bwd", config.lstm_hidden, config.frame_features)
    return spec


def text_branch_spec(config: ModelConfig) -> Spec:
    return _dense("txt.fc", config.text_hidden, config.text_dim)


def parameter_spec(config: ModelConfig) -> Spec:
    """Ordered ``(name, shape)`` list; the order fixes how the init stream is consumed."""
    arch = config.architecture
    modalities = config.modalities
    spec: Spec = []
    if arch in (ArchitectureId.IMG, ArchitectureId.HMAP_STATIC):
        spec += image_encoder_spec(config)
        spec += _dense("img.out", N_CLASSES, config.dense_width)
    elif arch is ArchitectureId.HMAP_TEMPORAL:
        spec += temporal_encoder_spec(config)
        spec += _dense("tmp.out", N_CLASSES, 2 * config.lstm_hidden)
    elif arch is ArchitectureId.TEXT:
        spec += text_branch_spec(config)
        spec += _dense("txt.out", N_CLASSES, config.text_hidden)
    elif arch is ArchitectureId.TEXT_IMG_FUSION or (
        arch is ArchitectureId.GAZE_SUPERVISED_UNET and Modality.TEXT in modalities
    ):
        spec += image_encoder_spec(config)
        spec += text_branch_spec(config)
        spec += [("head.img.w", (N_CLASSES, config.dense_width)), ("head.txt.w", (N_CLASSES, config.text_hidden))]
        spec += [("head.b", (N_CLASSES,))]
    elif arch is ArchitectureId.GAZE_SUPERVISED_UNET:
        spec += image_encoder_spec(config)
        spec += _dense("img.out", N_CLASSES, config.dense_width)
    elif arch is ArchitectureId.TEMPORAL_IMG_FUSION:
        spec += image_encoder_spec(config)
        spec += temporal_encoder_spec(config)
        spec += [("head.img.w", (N_CLASSES, config.dense_width)), ("head.tmp.w", (N_CLASSES, 2 * config.lstm_hidden))]
        spec += [("head.b", (N_CLASSES,))]

    if arch is ArchitectureId.GAZE_SUPERVISED_UNET:
        spec += decoder_spec(config)
    return spec


def init_params(config: ModelConfig) -> Params:
    """Glorot-uniform weights and zero biases drawn from the ``init`` seed stream."""
    rng = np.random.default_rng(derive_seed(config.seed, "init"))
    params: Params = {}
    for name, shape in parameter_spec(config):
        if len(shape) == 1:
            value = np.zeros(shape)
        else:
            value = glorot_uniform(rng, shape)
        params[name] = parameter(value, name=name)
    return params


def count_parameters(params: Params) -> int:
    return sum(p.size for p in params.values())


def snapshot(params: Params) -> Dict[str, np.ndarray]:
    """Copies of the current values, keyed by name."""
    return {name: p.value.copy() for name, p in params.items()}
