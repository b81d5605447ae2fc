"""Forward passes of the classification and attention architectures.

Every forward takes batched inputs (``[N, 1, S, S]`` grids, ``[N, D]`` vectors)
and returns a :class:`ForwardGraph` whose nodes stay attached to ``params`` so a
loss built on top of them can be swept.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gazemodal.core.models import ArchitectureId, Modality, ModelConfig, ModelOutput
from gazemodal.errors import ArgumentError, DimensionError, EmptyInputError
from gazemodal.ml.inputs import ModelInputs
from gazemodal.ml.params import Params, decoder_widths
from gazemodal.numeric.lstm import LSTMWeights, bilstm
from gazemodal.numeric.ops import (
    add,
    affine,
    concat,
    conv2d,
    getitem,
    global_avg_pool,
    max_pool2d,
    relu,
    reshape,
    sigmoid,
    softmax,
    upsample_nearest,
)
from gazemodal.numeric.tensor import ArrayLike, DifferentiableValue, constant


@dataclass
class ForwardGraph:
    logits: DifferentiableValue
    probabilities: DifferentiableValue
    attention: Optional[DifferentiableValue] = None

    def to_output(self) -> ModelOutput:
        attention = None
        if self.attention is not None:
            attention = self.attention.value[:, 0]
        return ModelOutput(
            logits=self.logits.value.copy(),
            probabilities=self.probabilities.value.copy(),
            attention_map=attention,
        )


def _grid_batch(x: ArrayLike, size: int, what: str) -> DifferentiableValue:
    """Accept ``[S, S]``, ``[N, S, S]`` or ``[N, 1, S, S]`` and return ``[N, 1, S, S]``."""
    x = constant(x)
    if x.ndim == 2:
        x = reshape(x, (1, 1, *x.shape))
    elif x.ndim == 3:
        x = reshape(x, (x.shape[0], 1, *x.shape[1:]))
    elif x.ndim != 4 or x.shape[1] != 1:
        raise DimensionError(f"{what} must be a single-channel grid batch, got shape {x.shape}", axis=1)
    if x.shape[2] != size:
        raise DimensionError(f"{what} height {x.shape[2]} does not match configured size {size}", axis="height")
    if x.shape[3] != size:
        raise DimensionError(f"{what} width {x.shape[3]} does not match configured size {size}", axis="width")
    return x


def _vector_batch(x: ArrayLike, dim: int) -> DifferentiableValue:
    x = constant(x)
    if x.ndim == 1:
        x = reshape(x, (1, x.shape[0]))
    if x.ndim != 2:
        raise DimensionError(f"text input must be [D] or [N, D], got shape {x.shape}", axis=0)
    if x.shape[1] != dim:
        raise DimensionError(f"text embedding has dim {x.shape[1]}, expected {dim}", axis=1)
    return x


def _conv_relu(x: DifferentiableValue, params: Params, name: str) -> DifferentiableValue:
    kernel = params[f"{name}.w"]
    return relu(conv2d(x, kernel, padding=kernel.shape[-1] // 2, bias=params[f"{name}.b"]))


def _dense(x: DifferentiableValue, params: Params, name: str) -> DifferentiableValue:
    return affine(x, params[f"{name}.w"], params[f"{name}.b"])


def encode_image(
    x: DifferentiableValue, params: Params, config: ModelConfig
) -> Tuple[DifferentiableValue, DifferentiableValue, List[DifferentiableValue]]:
    """Conv-conv-pool blocks; returns the dense feature, the bottleneck and pre-pool skips."""
    skips: List[DifferentiableValue] = []
    for block in range(len(config.channels)):
        x = _conv_relu(x, params, f"enc{block}.conv1")
        x = _conv_relu(x, params, f"enc{block}.conv2")
        skips.append(x)
        x = max_pool2d(x, 2)
    feature = relu(_dense(global_avg_pool(x), params, "img.fc"))
    return feature, x, skips


def decode_attention(
    bottleneck: DifferentiableValue, skips: Sequence[DifferentiableValue], params: Params, config: ModelConfig
) -> DifferentiableValue:
    """Upsample, join the matching skip, convolve; a 1x1 conv and sigmoid give the map."""
    x = bottleneck
    for block, skip in enumerate(list(skips)[::-1][: len(decoder_widths(config))]):
        x = upsample_nearest(x, 2)
        x = concat([x, skip], axis=1)
        x = _conv_relu(x, params, f"dec{block}.conv")
    return sigmoid(conv2d(x, params["dec.out.w"], bias=params["dec.out.b"]))


def encode_text(x: DifferentiableValue, params: Params) -> DifferentiableValue:
    return relu(_dense(x, params, "txt.fc"))


def _lstm_weights(params: Params, direction: str) -> LSTMWeights:
    return LSTMWeights(
        input_weights=params[f"lstm.{direction}.W"],
        recurrent_weights=params[f"lstm.{direction}.U"],
        bias=params[f"lstm.{direction}.b"],
    )


def encode_frames(frames: Sequence[ArrayLike], params: Params, config: ModelConfig) -> DifferentiableValue:
    """Shared CNN per frame, then a bidirectional LSTM; returns ``[N, 2h]``."""
    if not frames:
        raise EmptyInputError("temporal input needs at least one frame")
    if len(frames) > config.max_frames:
        raise ArgumentError(f"{len(frames)} frames exceed max_frames {config.max_frames}")
    steps = [_grid_batch(f, config.image_size, "frame") for f in frames]
    n = steps[0].shape[0]
    for t, step in enumerate(steps):
        if step.shape[0] != n:
            raise DimensionError(f"frame {t} has batch {step.shape[0]}, expected {n}", axis=0)

    # All frames go through the shared encoder in one pass.
    x = concat(steps, axis=0)
    for block in range(len(config.frame_channels)):
        x = max_pool2d(_conv_relu(x, params, f"frame{block}.conv"), 2)
    features = relu(_dense(global_avg_pool(x), params, "frame.fc"))
    features = reshape(features, (len(steps), n, config.frame_features))
    sequence = [getitem(features, t) for t in range(len(steps))]
    return bilstm(sequence, config.lstm_hidden, _lstm_weights(params, "fwd"), _lstm_weights(params, "bwd"))


def _finish(logits: DifferentiableValue, attention: Optional[DifferentiableValue] = None) -> ForwardGraph:
    return ForwardGraph(logits=logits, probabilities=softmax(logits), attention=attention)


def image_classifier_forward(image: ArrayLike, params: Params, config: ModelConfig) -> ForwardGraph:
    feature, _, _ = encode_image(_grid_batch(image, config.image_size, "image"), params, config)
    return _finish(_dense(feature, params, "img.out"))


def static_heatmap_classifier_forward(heatmap: ArrayLike, params: Params, config: ModelConfig) -> ForwardGraph:
    """Same network as the image classifier, fed the static heatmap."""
    feature, _, _ = encode_image(_grid_batch(heatmap, config.image_size, "heatmap"), params, config)
    return _finish(_dense(feature, params, "img.out"))


def temporal_classifier_forward(frames: Sequence[ArrayLike], params: Params, config: ModelConfig) -> ForwardGraph:
    return _finish(_dense(encode_frames(frames, params, config), params, "tmp.out"))


def text_classifier_forward(embedding: ArrayLike, params: Params, config: ModelConfig) -> ForwardGraph:
    hidden = encode_text(_vector_batch(embedding, config.text_dim), params)
    return _finish(_dense(hidden, params, "txt.out"))


def _fused_logits(
    feature: DifferentiableValue, other: DifferentiableValue, params: Params, other_key: str
) -> DifferentiableValue:
    """Class head over ``concat(feature, other)`` with its weight matrix split per branch."""
    return add(affine(feature, params["head.img.w"], params["head.b"]), affine(other, params[other_key]))


def fusion_forward(image: ArrayLike, embedding: ArrayLike, params: Params, config: ModelConfig) -> ForwardGraph:
    feature, _, _ = encode_image(_grid_batch(image, config.image_size, "image"), params, config)
    text = encode_text(_vector_batch(embedding, config.text_dim), params)
    _check_batch(feature, text)
    return _finish(_fused_logits(feature, text, params, "head.txt.w"))


def gaze_supervised_unet_forward(
    image: ArrayLike,
    params: Params,
    config: ModelConfig,
    embedding: Optional[ArrayLike] = None,
) -> ForwardGraph:
    """Shared encoder with a class head on the bottleneck and a decoder to a [0, 1] map.

    When ``config`` has a text source the class head also sees the text branch.
    """
    feature, bottleneck, skips = encode_image(_grid_batch(image, config.image_size, "image"), params, config)
    attention = decode_attention(bottleneck, skips, params, config)
    if Modality.TEXT in config.modalities:
        if embedding is None:
            raise ArgumentError("this attention model was configured with a text branch; pass an embedding")
        text = encode_text(_vector_batch(embedding, config.text_dim), params)
        _check_batch(feature, text)
        logits = _fused_logits(feature, text, params, "head.txt.w")
    else:
        logits = _dense(feature, params, "img.out")
    return _finish(logits, attention)


def temporal_image_fusion_forward(
    image: ArrayLike, frames: Sequence[ArrayLike], params: Params, config: ModelConfig
) -> ForwardGraph:
    feature, _, _ = encode_image(_grid_batch(image, config.image_size, "image"), params, config)
    temporal = encode_frames(frames, params, config)
    _check_batch(feature, temporal)
    return _finish(_fused_logits(feature, temporal, params, "head.tmp.w"))


def _check_batch(a: DifferentiableValue, b: DifferentiableValue) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"branch batches differ: {a.shape[0]} vs {b.shape[0]}", axis=0)


def forward(config: ModelConfig, params: Params, batch: ModelInputs) -> ForwardGraph:
    """Dispatch a prepared batch to the configured architecture."""
    arch = config.architecture
    if arch is ArchitectureId.IMG:
        return image_classifier_forward(batch.image, params, config)
    if arch is ArchitectureId.HMAP_STATIC:
        return static_heatmap_classifier_forward(batch.static, params, config)
    if arch is ArchitectureId.HMAP_TEMPORAL:
        return temporal_classifier_forward(batch.frame_steps(), params, config)
    if arch is ArchitectureId.TEXT:
        return text_classifier_forward(batch.text, params, config)
    if arch is ArchitectureId.TEXT_IMG_FUSION:
        return fusion_forward(batch.image, batch.text, params, config)
    if arch is ArchitectureId.GAZE_SUPERVISED_UNET:
        return gaze_supervised_unet_forward(batch.image, params, config, embedding=batch.text)
    if arch is ArchitectureId.TEMPORAL_IMG_FUSION:
        return temporal_image_fusion_forward(batch.image, batch.frame_steps(), params, config)
    raise ArgumentError(f"unknown architecture {arch!r}")


def attention_to_heatmap(attention: np.ndarray) -> np.ndarray:
    """Scale a [0, 1] map to integers in [0, 255]."""
    return np.rint(np.clip(attention, 0.0, 1.0) * 255.0).astype(np.uint8)
