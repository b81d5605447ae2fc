"""Turn study records into the arrays each architecture consumes."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from gazemodal.core.models import Modality, ModelConfig, StudyRecord
from gazemodal.data.heatmaps import resize_grid
from gazemodal.errors import ArgumentError, MissingModalityError
from gazemodal.text.skipgram import EmbeddingModel, sentence_embedding

PIXEL_SCALE = 255.0


@dataclass
class ModelInputs:
    """Per-study arrays: images and heatmaps as ``[N, 1, S, S]`` in [0, 1], text as ``[N, D]``.

    ``frames`` holds one ``[T_i, 1, S, S]`` array per study.
    """

    study_ids: List[str]
    targets: np.ndarray
    image: Optional[np.ndarray] = None
    static: Optional[np.ndarray] = None
    frames: Optional[List[np.ndarray]] = None
    text: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.study_ids)

    def subset(self, index: Sequence[int]) -> "ModelInputs":
        index = np.asarray(index, dtype=np.int64)
        return ModelInputs(
            study_ids=[self.study_ids[i] for i in index],
            targets=self.targets[index],
            image=None if self.image is None else self.image[index],
            static=None if self.static is None else self.static[index],
            frames=None if self.frames is None else [self.frames[i] for i in index],
            text=None if self.text is None else self.text[index],
        )

    def frame_steps(self) -> List[np.ndarray]:
        """Frames regrouped as ``T`` arrays of ``[N, 1, S, S]``; all studies must share ``T``."""
        lengths = {len(f) for f in self.frames or []}
        if len(lengths) != 1:
            raise ArgumentError(f"batch mixes sequence lengths {sorted(lengths)}")
        stacked = np.stack(self.frames, axis=1)
        return [stacked[t] for t in range(stacked.shape[0])]

    def sequence_lengths(self) -> List[int]:
        return [len(f) for f in self.frames] if self.frames is not None else [0] * len(self)


def _grid(values: np.ndarray, size: int) -> np.ndarray:
    grid = np.asarray(values, dtype=np.float64)
    if grid.shape != (size, size):
        grid = resize_grid(grid, size, size)
    return (grid / PIXEL_SCALE)[None, :, :]


def _require(record: StudyRecord, modality: Modality, config: ModelConfig) -> None:
    if modality is Modality.TEMPORAL and not record.temporal:
        raise MissingModalityError(
            f"study {record.study_id} has no temporal heatmaps, required by {config.architecture.value}"
        )
    if modality is Modality.TEMPORAL and len(record.temporal) > config.max_frames:
        raise ArgumentError(
            f"study {record.study_id} has {len(record.temporal)} frames, more than max_frames {config.max_frames}"
        )


def prepare_inputs(
    records: Sequence[StudyRecord],
    config: ModelConfig,
    embedding: Optional[EmbeddingModel] = None,
) -> ModelInputs:
    """Build the arrays ``config`` needs, resized to ``config.image_size``."""
    modalities = config.modalities
    size = config.image_size
    if Modality.TEXT in modalities and embedding is None:
        raise MissingModalityError(f"{config.architecture.value} needs a text embedding model")
    if Modality.TEXT in modalities and embedding.dim != config.text_dim:
        raise ArgumentError(f"embedding dim {embedding.dim} does not match text_dim {config.text_dim}")

    for record in records:
        for modality in modalities:
            _require(record, modality, config)

    arrays: Dict[str, object] = {}
    if Modality.IMAGE in modalities:
        arrays["image"] = np.stack([_grid(r.image, size) for r in records]) if records else np.zeros((0, 1, size, size))
    if Modality.STATIC in modalities:
        arrays["static"] = (
            np.stack([_grid(r.static.values, size) for r in records]) if records else np.zeros((0, 1, size, size))
        )
    if Modality.TEMPORAL in modalities:
        arrays["frames"] = [np.stack([_grid(f.values, size) for f in r.temporal]) for r in records]
    if Modality.TEXT in modalities:
        vectors = [sentence_embedding(r.text(config.text_source), embedding).vector for r in records]
        arrays["text"] = np.stack(vectors) if vectors else np.zeros((0, config.text_dim))

    return ModelInputs(
        study_ids=[r.study_id for r in records],
        targets=np.array([r.label.index for r in records], dtype=np.int64),
        **arrays,
    )
