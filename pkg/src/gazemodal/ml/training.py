"""Loss composition, the mini-batch training loop and batched prediction."""

from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from gazemodal.config import derive_seed
from gazemodal.core.models import LOSS_WEIGHTS, ModelConfig, ModelOutput, StudyRecord
from gazemodal.ml.architectures import ForwardGraph, forward
from gazemodal.ml.inputs import ModelInputs, prepare_inputs
from gazemodal.ml.params import Params, init_params
from gazemodal.numeric.ops import add, cross_entropy_loss, mse_loss, scale
from gazemodal.numeric.optim import Adam
from gazemodal.numeric.tensor import DifferentiableValue, reverse_sweep
from gazemodal.text.skipgram import EmbeddingModel
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)

Scalar = Union[float, DifferentiableValue]


class TrainResult(BaseModel):
    """Trained parameters plus the mean loss of each epoch."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ModelConfig
    params: Dict[str, DifferentiableValue]
    train_losses: List[float] = Field(default_factory=list)
    valid_losses: List[float] = Field(default_factory=list)


def combined_loss(alpha: Scalar, beta: Scalar) -> Scalar:
    """``w_heatmap * alpha + w_class * beta`` with the fixed weights."""
    if isinstance(alpha, DifferentiableValue) or isinstance(beta, DifferentiableValue):
        return add(scale(alpha, LOSS_WEIGHTS.w_heatmap), scale(beta, LOSS_WEIGHTS.w_class))
    return LOSS_WEIGHTS.w_heatmap * alpha + LOSS_WEIGHTS.w_class * beta


def heatmap_weights(target: np.ndarray, peak_weight: float) -> np.ndarray:
    """Per-pixel heatmap-loss weights ``1 + peak_weight * target``; zero weight gives plain MSE."""
    return 1.0 + peak_weight * np.asarray(target, dtype=np.float64)


def batch_loss(config: ModelConfig, graph: ForwardGraph, batch: ModelInputs) -> DifferentiableValue:
    """Classification loss, or the weighted sum with the heatmap loss when enabled."""
    beta = cross_entropy_loss(graph.probabilities, batch.targets)
    if not config.heatmap_loss:
        return beta
    weights = heatmap_weights(batch.static, config.heatmap_peak_weight)
    alpha = mse_loss(graph.attention, batch.static, weights=weights)
    return combined_loss(alpha, beta)


def make_batches(
    inputs: ModelInputs, batch_size: int, rng: np.random.Generator
) -> List[np.ndarray]:
    """Shuffled index batches; studies are grouped by sequence length so each batch is uniform."""
    order = rng.permutation(len(inputs))
    lengths = inputs.sequence_lengths()
    buckets: Dict[int, List[int]] = {}
    for i in order:
        buckets.setdefault(lengths[int(i)], []).append(int(i))
    batches = [
        np.array(members[start : start + batch_size])
        for _, members in sorted(buckets.items())
        for start in range(0, len(members), batch_size)
    ]
    return [batches[int(i)] for i in rng.permutation(len(batches))]


def _ordered_batches(inputs: ModelInputs, batch_size: int) -> List[np.ndarray]:
    lengths = inputs.sequence_lengths()
    batches: List[np.ndarray] = []
    for length in sorted(set(lengths)):
        members = [i for i, n in enumerate(lengths) if n == length]
        batches += [np.array(members[s : s + batch_size]) for s in range(0, len(members), batch_size)]
    return batches


def evaluate_loss(config: ModelConfig, params: Params, inputs: ModelInputs) -> float:
    """Mean per-study loss over ``inputs`` without touching gradients."""
    total = 0.0
    for index in _ordered_batches(inputs, config.batch_size):
        batch = inputs.subset(index)
        total += batch_loss(config, forward(config, params, batch), batch).item() * len(index)
    return total / max(1, len(inputs))


def train_model(
    config: ModelConfig,
    train: Sequence[StudyRecord],
    valid: Sequence[StudyRecord] = (),
    embedding: Optional[EmbeddingModel] = None,
    fold: Optional[int] = None,
) -> TrainResult:
    """Mini-batch Adam for ``config.epochs`` epochs from the seeded initialization."""
    train_inputs = prepare_inputs(train, config, embedding)
    valid_inputs = prepare_inputs(valid, config, embedding) if valid else None
    params = init_params(config)
    optimizer = Adam(params, **config.optimizer_settings())
    rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))

    result = TrainResult(config=config, params=params)
    for epoch in range(config.epochs):
        epoch_total = 0.0
        for index in make_batches(train_inputs, config.batch_size, rng):
            batch = train_inputs.subset(index)
            loss = batch_loss(config, forward(config, params, batch), batch)
            reverse_sweep(loss)
            optimizer.step()
            epoch_total += loss.item() * len(index)
        result.train_losses.append(epoch_total / max(1, len(train_inputs)))
        if valid_inputs is not None:
            result.valid_losses.append(evaluate_loss(config, params, valid_inputs))
        logger.debug(
            "training_epoch",
            architecture=config.architecture.value,
            fold=fold,
            epoch=epoch,
            loss=result.train_losses[-1],
            valid_loss=result.valid_losses[-1] if result.valid_losses else None,
        )

    logger.info(
        "training_finished",
        architecture=config.architecture.value,
        fold=fold,
        epochs=config.epochs,
        studies=len(train_inputs),
        final_loss=result.train_losses[-1] if result.train_losses else None,
    )
    return result


def predict(
    config: ModelConfig,
    params: Params,
    records: Sequence[StudyRecord],
    embedding: Optional[EmbeddingModel] = None,
) -> ModelOutput:
    """Probabilities (and attention maps) for ``records`` in their given order."""
    inputs = prepare_inputs(records, config, embedding)
    logits = np.zeros((len(inputs), 3))
    probabilities = np.zeros((len(inputs), 3))
    attention = None
    if config.architecture.emits_attention:
        attention = np.zeros((len(inputs), config.image_size, config.image_size))
    for index in _ordered_batches(inputs, config.batch_size):
        output = forward(config, params, inputs.subset(index)).to_output()
        logits[index] = output.logits
        probabilities[index] = output.probabilities
        if attention is not None:
            attention[index] = output.attention_map
    return ModelOutput(logits=logits, probabilities=probabilities, attention_map=attention)
