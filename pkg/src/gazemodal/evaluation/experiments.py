"""Patient-grouped cross-validation runs and the experiment matrix."""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from gazemodal.config import settings
from gazemodal.core.models import (
    ArchitectureId,
    AucReport,
    FoldAuc,
    ModelConfig,
    OverlapReport,
    StudyRecord,
    TextSource,
)
from gazemodal.data.folds import grouped_kfold
from gazemodal.data.heatmaps import resize_grid
from gazemodal.errors import ExperimentError, GazeModalError
from gazemodal.evaluation.metrics import attention_overlap, ovr_auc_report
from gazemodal.ml.architectures import attention_to_heatmap
from gazemodal.ml.training import predict, train_model
from gazemodal.text.skipgram import EmbeddingModel
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)


class ExperimentSpec(BaseModel):
    """What one cross-validation run trains: architecture, text input and heatmap supervision."""

    model_config = ConfigDict(frozen=True)

    experiment_id: str
    title: str
    architecture: ArchitectureId
    text_source: Optional[TextSource] = None
    heatmap_loss: bool = False

    @property
    def key(self) -> Tuple[ArchitectureId, Optional[TextSource], bool]:
        """Runs with equal keys produce identical results."""
        return self.architecture, self.text_source, self.heatmap_loss


class ExperimentDataset(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: List[StudyRecord]
    embedding: Optional[EmbeddingModel] = None


class ExperimentResult(BaseModel):
    """AUCs per fold plus, for attention models, overlap scores and the held-out maps."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: ExperimentSpec
    auc: AucReport
    overlap: Optional[OverlapReport] = None
    attention_maps: Dict[str, np.ndarray] = Field(default_factory=dict)
    fold_of: Dict[str, int] = Field(default_factory=dict)


class OverlapRow(BaseModel):
    """One row of the with/without heatmap-loss comparison."""

    model_config = ConfigDict(frozen=True)

    title: str
    without_loss: str
    with_loss: str


CLASSIFICATION_EXPERIMENTS: List[ExperimentSpec] = [
    ExperimentSpec(experiment_id="img", title="Chest X-ray", architecture=ArchitectureId.IMG),
    ExperimentSpec(experiment_id="hmap_static", title="Static heatmap", architecture=ArchitectureId.HMAP_STATIC),
    ExperimentSpec(
        experiment_id="hmap_temporal", title="Temporal heatmaps", architecture=ArchitectureId.HMAP_TEMPORAL
    ),
    ExperimentSpec(
        experiment_id="text_indication",
        title="Exam indication text",
        architecture=ArchitectureId.TEXT,
        text_source=TextSource.INDICATION,
    ),
    ExperimentSpec(
        experiment_id="text_full",
        title="Full report text",
        architecture=ArchitectureId.TEXT,
        text_source=TextSource.FULL,
    ),
    ExperimentSpec(
        experiment_id="img_text_full",
        title="Full report text and chest X-ray",
        architecture=ArchitectureId.TEXT_IMG_FUSION,
        text_source=TextSource.FULL,
    ),
    ExperimentSpec(
        experiment_id="img_text_indication",
        title="Exam indication text and chest X-ray",
        architecture=ArchitectureId.TEXT_IMG_FUSION,
        text_source=TextSource.INDICATION,
    ),
    ExperimentSpec(
        experiment_id="img_static_gt",
        title="Chest X-ray with static heatmap ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        heatmap_loss=True,
    ),
    ExperimentSpec(
        experiment_id="img_temporal",
        title="Chest X-ray and temporal heatmaps",
        architecture=ArchitectureId.TEMPORAL_IMG_FUSION,
    ),
]

EXPLAINABILITY_EXPERIMENTS: List[ExperimentSpec] = [
    ExperimentSpec(experiment_id="attn_img", title="Chest X-ray", architecture=ArchitectureId.GAZE_SUPERVISED_UNET),
    ExperimentSpec(
        experiment_id="img_static_gt",
        title="Chest X-ray with static heatmap as ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        heatmap_loss=True,
    ),
    ExperimentSpec(
        experiment_id="attn_img_indication",
        title="Chest X-ray and exam indication without static heatmap ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        text_source=TextSource.INDICATION,
    ),
    ExperimentSpec(
        experiment_id="attn_img_indication_static_gt",
        title="Chest X-ray and exam indication with static heatmap ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        text_source=TextSource.INDICATION,
        heatmap_loss=True,
    ),
    ExperimentSpec(
        experiment_id="attn_img_full",
        title="Chest X-ray and full report without static heatmap ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        text_source=TextSource.FULL,
    ),
    ExperimentSpec(
        experiment_id="attn_img_full_static_gt",
        title="Chest X-ray and full report with static heatmap ground truth",
        architecture=ArchitectureId.GAZE_SUPERVISED_UNET,
        text_source=TextSource.FULL,
        heatmap_loss=True,
    ),
]

OVERLAP_COMPARISONS: List[OverlapRow] = [
    OverlapRow(title="X-Ray", without_loss="attn_img", with_loss="img_static_gt"),
    OverlapRow(
        title="X-Ray + Exam Indication",
        without_loss="attn_img_indication",
        with_loss="attn_img_indication_static_gt",
    ),
    OverlapRow(title="X-Ray + Full Report", without_loss="attn_img_full", with_loss="attn_img_full_static_gt"),
]


def experiment_matrix() -> List[ExperimentSpec]:
    """Classification then explainability runs, each distinct run listed once."""
    seen = set()
    unique: List[ExperimentSpec] = []
    for spec in CLASSIFICATION_EXPERIMENTS + EXPLAINABILITY_EXPERIMENTS:
        if spec.key not in seen:
            seen.add(spec.key)
            unique.append(spec)
    return unique


def find_experiment(experiment_id: str) -> ExperimentSpec:
    for spec in experiment_matrix():
        if spec.experiment_id == experiment_id:
            return spec
    raise KeyError(experiment_id)


def model_defaults(dataset: ExperimentDataset) -> Dict[str, Any]:
    """Model sizes and optimizer settings drawn from the environment settings."""
    defaults: Dict[str, Any] = {
        "image_size": settings.image_size,
        "channels": settings.channel_widths,
        "lstm_hidden": settings.lstm_hidden,
        "max_frames": settings.temporal_frames,
        "epochs": settings.epochs,
        "batch_size": settings.batch_size,
        "lr": settings.lr,
        "beta1": settings.beta1,
        "beta2": settings.beta2,
        "epsilon": settings.epsilon,
        "heatmap_peak_weight": settings.heatmap_peak_weight,
    }
    if dataset.embedding is not None:
        defaults["text_dim"] = dataset.embedding.dim
    if dataset.records:
        defaults["max_frames"] = max(defaults["max_frames"], max(len(r.temporal) for r in dataset.records))
    return defaults


def build_model_config(
    spec: ExperimentSpec, dataset: ExperimentDataset, seed: int, overrides: Optional[Dict[str, Any]] = None
) -> ModelConfig:
    values = {**model_defaults(dataset), **(overrides or {})}
    return ModelConfig(
        architecture=spec.architecture,
        text_source=spec.text_source,
        heatmap_loss=spec.heatmap_loss,
        seed=seed,
        **values,
    )


def _check_patient_purity(train: Sequence[StudyRecord], test: Sequence[StudyRecord], fold: int) -> None:
    shared = {r.patient_id for r in train} & {r.patient_id for r in test}
    if shared:
        raise ExperimentError(f"patients in both training and evaluation sets: {sorted(shared)[:5]}", fold=fold)


def _attention_grid(attention: np.ndarray, record: StudyRecord) -> np.ndarray:
    """Model-resolution [0, 1] map as a [0, 255] grid in the record's image frame."""
    grid = attention_to_heatmap(attention)
    height, width = record.image.shape
    if grid.shape != (height, width):
        grid = resize_grid(grid, width, height)
    return grid


def run_cv_experiment(
    spec: ExperimentSpec,
    dataset: ExperimentDataset,
    k: int = 5,
    seed: int = 0,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentResult:
    """Train on ``k - 1`` patient-grouped folds and score the held-out fold, for every fold."""
    records = dataset.records
    assignment = grouped_kfold(records, k, seed)
    per_fold: List[FoldAuc] = []
    overlaps: Dict[str, float] = {}
    attention_maps: Dict[str, np.ndarray] = {}

    for fold in range(k):
        test = [r for r in records if assignment.assignment[r.study_id] == fold]
        train = [r for r in records if assignment.assignment[r.study_id] != fold]
        _check_patient_purity(train, test, fold)
        try:
            config = build_model_config(spec, dataset, seed + fold, overrides)
            result = train_model(config, train, embedding=dataset.embedding, fold=fold)
            output = predict(config, result.params, test, embedding=dataset.embedding)
            per_fold.append(ovr_auc_report(output.probabilities, [int(r.label) for r in test]))
        except ExperimentError:
            raise
        except GazeModalError as exc:
            raise ExperimentError(f"{spec.experiment_id}: {exc}", fold=fold) from exc

        if output.attention_map is not None:
            for record, attention in zip(test, output.attention_map):
                grid = _attention_grid(attention, record)
                attention_maps[record.study_id] = grid
                if record.boxes:
                    overlaps[record.study_id] = attention_overlap(grid, record.boxes)

        logger.info(
            "fold_finished",
            experiment=spec.experiment_id,
            fold=fold,
            train=len(train),
            test=len(test),
            macro_auc=per_fold[-1].macro_avg,
        )

    overlap = None
    if spec.architecture.emits_attention:
        overlap = OverlapReport(experiment_id=spec.experiment_id, per_study=overlaps)
    return ExperimentResult(
        spec=spec,
        auc=AucReport(experiment_id=spec.experiment_id, per_fold=per_fold),
        overlap=overlap,
        attention_maps=attention_maps,
        fold_of=dict(assignment.assignment),
    )
