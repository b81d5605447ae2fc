"""Core data models for studies, gaze data, architectures and metrics."""

from enum import Enum, IntEnum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CLASS_NAMES = ("Normal", "CHF", "Pneumonia")
REPORT_SECTIONS = ("indication", "findings", "impression")


class Label(IntEnum):
    """Class codes follow the 1/2/3 legend used in the embedding plots."""

    NORMAL = 1
    CHF = 2
    PNEUMONIA = 3

    @property
    def index(self) -> int:
        """Column of this class in a probability row."""
        return int(self) - 1

    @property
    def display(self) -> str:
        return CLASS_NAMES[self.index]


class FixationEvent(BaseModel):
    """One dwell of the radiologist's gaze."""

    model_config = ConfigDict(frozen=True)

    t_start: float = Field(ge=0, description="Start time in milliseconds")
    duration: float = Field(gt=0, description="Dwell time in milliseconds")
    x: float = Field(ge=0.0, le=1.0, description="Normalized horizontal position")
    y: float = Field(ge=0.0, le=1.0, description="Normalized vertical position")


class Heatmap(BaseModel):
    """2D intensity grid with integer values in [0, 255]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, v):
        array = np.asarray(v)
        if array.ndim != 2:
            raise ValueError(f"heatmap must be 2D, got shape {array.shape}")
        if array.size and (array.min() < 0 or array.max() > 255):
            raise ValueError("heatmap values must lie in [0, 255]")
        if not np.all(np.equal(np.mod(array, 1), 0)):
            raise ValueError("heatmap values must be integers")
        return array.astype(np.uint8)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Heatmap) and np.array_equal(self.values, other.values)


class BoundingBox(BaseModel):
    """Annotated region in resized-image pixel coordinates; the interior is half-open."""

    model_config = ConfigDict(frozen=True)

    x_min: int = Field(ge=0)
    y_min: int = Field(ge=0)
    x_max: int
    y_max: int

    @model_validator(mode="after")
    def check_order(self) -> "BoundingBox":
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError(f"empty bounding box {self.x_min, self.y_min, self.x_max, self.y_max}")
        return self

    def fits(self, width: int, height: int) -> bool:
        return self.x_max <= width and self.y_max <= height


class StudyRecord(BaseModel):
    """One case: image, sectioned report, gaze data, label and patient."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    study_id: str
    patient_id: str
    label: Label
    image: np.ndarray
    report: Dict[str, str]
    fixations: List[FixationEvent] = Field(default_factory=list)
    temporal: List[Heatmap] = Field(default_factory=list)
    static: Heatmap
    boxes: List[BoundingBox] = Field(default_factory=list)

    @field_validator("image", mode="before")
    @classmethod
    def check_image(cls, v):
        array = np.asarray(v)
        if array.ndim != 2:
            raise ValueError(f"image must be a 2D grayscale grid, got shape {array.shape}")
        return array.astype(np.uint8)

    @field_validator("report")
    @classmethod
    def check_report(cls, v: Dict[str, str]) -> Dict[str, str]:
        unknown = set(v) - set(REPORT_SECTIONS)
        if unknown:
            raise ValueError(f"unknown report sections {sorted(unknown)}")
        return {section: v.get(section, "") for section in REPORT_SECTIONS}

    @model_validator(mode="after")
    def check_shapes(self) -> "StudyRecord":
        height, width = self.image.shape
        for frame in [*self.temporal, self.static]:
            if frame.values.shape != (height, width):
                raise ValueError(
                    f"heatmap shape {frame.values.shape} does not match image {(height, width)}"
                )
        for box in self.boxes:
            if not box.fits(width, height):
                raise ValueError(f"bounding box {box} outside {width}x{height} image")
        return self

    def text(self, source: "TextSource") -> str:
        """Report text for one input source."""
        if source == TextSource.INDICATION:
            return self.report["indication"]
        return "\n".join(self.report[section] for section in REPORT_SECTIONS)


class FoldAssignment(BaseModel):
    """Study-to-fold mapping for patient-grouped cross-validation."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=2)
    assignment: Dict[str, int]

    @model_validator(mode="after")
    def check_range(self) -> "FoldAssignment":
        bad = {sid: fold for sid, fold in self.assignment.items() if not 0 <= fold < self.k}
        if bad:
            raise ValueError(f"fold indices outside [0, {self.k}): {bad}")
        return self

    def members(self, fold: int) -> List[str]:
        """Study IDs held out in ``fold``, in insertion order."""
        return [sid for sid, f in self.assignment.items() if f == fold]

    def sizes(self) -> List[int]:
        return [len(self.members(fold)) for fold in range(self.k)]


class TextSource(str, Enum):
    """Which part of the report feeds a text branch."""

    INDICATION = "indication"
    FULL = "full"


class Modality(str, Enum):
    IMAGE = "image"
    STATIC = "static"
    TEMPORAL = "temporal"
    TEXT = "text"


class ArchitectureId(str, Enum):
    """One identifier per architecture family."""

    IMG = "IMG"
    HMAP_STATIC = "HMAP_STATIC"
    HMAP_TEMPORAL = "HMAP_TEMPORAL"
    TEXT = "TEXT"
    TEXT_IMG_FUSION = "TEXT_IMG_FUSION"
    GAZE_SUPERVISED_UNET = "GAZE_SUPERVISED_UNET"
    TEMPORAL_IMG_FUSION = "TEMPORAL_IMG_FUSION"

    @property
    def base_modalities(self) -> FrozenSet[Modality]:
        return _BASE_MODALITIES[self]

    @property
    def emits_attention(self) -> bool:
        return self is ArchitectureId.GAZE_SUPERVISED_UNET


_BASE_MODALITIES = {
    ArchitectureId.IMG: frozenset({Modality.IMAGE}),
    ArchitectureId.HMAP_STATIC: frozenset({Modality.STATIC}),
    ArchitectureId.HMAP_TEMPORAL: frozenset({Modality.TEMPORAL}),
    ArchitectureId.TEXT: frozenset({Modality.TEXT}),
    ArchitectureId.TEXT_IMG_FUSION: frozenset({Modality.IMAGE, Modality.TEXT}),
    ArchitectureId.GAZE_SUPERVISED_UNET: frozenset({Modality.IMAGE}),
    ArchitectureId.TEMPORAL_IMG_FUSION: frozenset({Modality.IMAGE, Modality.TEMPORAL}),
}

_TEXT_REQUIRED = {ArchitectureId.TEXT, ArchitectureId.TEXT_IMG_FUSION}
_TEXT_OPTIONAL = {ArchitectureId.GAZE_SUPERVISED_UNET}


class ModelConfig(BaseModel):
    """Architecture choice plus every size and optimizer setting of one training run."""

    model_config = ConfigDict(frozen=True)

    architecture: ArchitectureId
    image_size: int = Field(default=64, ge=2)
    channels: Tuple[int, ...] = Field(default=(8, 16, 32, 64))
    frame_channels: Tuple[int, ...] = Field(default=(8, 16, 32))
    frame_features: int = Field(default=32, ge=1)
    dense_width: int = Field(default=32, ge=1)
    text_hidden: int = Field(default=64, ge=1)
    text_dim: int = Field(default=150, ge=1)
    lstm_hidden: int = Field(default=32, ge=1)
    max_frames: int = Field(default=8, ge=1)
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9)
    beta2: float = Field(default=0.999)
    epsilon: float = Field(default=1e-8)
    heatmap_loss: bool = False
    heatmap_peak_weight: float = Field(default=20.0, ge=0)
    text_source: Optional[TextSource] = None
    seed: int = 0

    @model_validator(mode="after")
    def check_consistency(self) -> "ModelConfig":
        if self.heatmap_loss and self.architecture is not ArchitectureId.GAZE_SUPERVISED_UNET:
            raise ValueError("heatmap loss is only valid for GAZE_SUPERVISED_UNET")
        if self.architecture in _TEXT_REQUIRED and self.text_source is None:
            raise ValueError(f"{self.architecture.value} needs a text_source")
        if (
            self.text_source is not None
            and self.architecture not in _TEXT_REQUIRED | _TEXT_OPTIONAL
        ):
            raise ValueError(f"{self.architecture.value} takes no text input")
        for name, widths in (("channels", self.channels), ("frame_channels", self.frame_channels)):
            if not widths:
                raise ValueError(f"{name} must not be empty")
            if self.image_size % (2 ** len(widths)):
                raise ValueError(
                    f"image_size {self.image_size} not divisible by 2^{len(widths)} for {name}"
                )
        return self

    @property
    def modalities(self) -> FrozenSet[Modality]:
        base = self.architecture.base_modalities
        if self.text_source is not None:
            base = base | {Modality.TEXT}
        if self.heatmap_loss:
            base = base | {Modality.STATIC}
        return base

    def optimizer_settings(self) -> Dict[str, float]:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "epsilon": self.epsilon}


class ModelOutput(BaseModel):
    """Forward result for a batch: logits, class probabilities and an optional attention map."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    logits: np.ndarray
    probabilities: np.ndarray
    attention_map: Optional[np.ndarray] = None


class LossWeights(BaseModel):
    """Fixed weights of the heatmap and classification terms of the total loss."""

    model_config = ConfigDict(frozen=True)

    w_heatmap: float = 0.5827
    w_class: float = 0.4173


LOSS_WEIGHTS = LossWeights()


class FoldAuc(BaseModel):
    auc_normal: float = Field(ge=0.0, le=1.0)
    auc_chf: float = Field(ge=0.0, le=1.0)
    auc_pneumonia: float = Field(ge=0.0, le=1.0)
    macro_avg: float = Field(ge=0.0, le=1.0)

    def values(self) -> List[float]:
        return [self.auc_normal, self.auc_chf, self.auc_pneumonia, self.macro_avg]


class AucReport(BaseModel):
    """Per-fold one-vs-rest AUCs plus column means."""

    experiment_id: str
    per_fold: List[FoldAuc]

    @property
    def overall(self) -> FoldAuc:
        columns = np.array([fold.values() for fold in self.per_fold]).mean(axis=0)
        return FoldAuc(
            auc_normal=columns[0], auc_chf=columns[1], auc_pneumonia=columns[2], macro_avg=columns[3]
        )


class OverlapReport(BaseModel):
    """Attention overlap per annotated held-out study."""

    experiment_id: str
    per_study: Dict[str, float] = Field(default_factory=dict)

    @field_validator("per_study")
    @classmethod
    def check_range(cls, v: Dict[str, float]) -> Dict[str, float]:
        for study_id, value in v.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"overlap {value} for {study_id} outside [0, 1]")
        return v

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.per_study.values()))) if self.per_study else 0.0

    @property
    def median(self) -> float:
        return float(np.median(list(self.per_study.values()))) if self.per_study else 0.0
