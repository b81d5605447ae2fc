"""Seeded synthetic stand-in for the eye-gaze chest X-ray dataset."""

import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator
from scipy.special import expit

from gazemodal.config import derive_seed, settings
from gazemodal.core.models import BoundingBox, FixationEvent, Label, StudyRecord
from gazemodal.data.heatmaps import amalgamate_heatmaps, temporal_heatmaps
from gazemodal.data.pgm import write_pgm
from gazemodal.utils.logger import get_logger

logger = get_logger(__name__)

MANIFEST_COLUMNS = [
    "study_id",
    "patient_id",
    "label",
    "image",
    "report",
    "fixations",
    "temporal_dir",
    "static_heatmap",
]
FIXATION_COLUMNS = ["t_start_ms", "duration_ms", "x_norm", "y_norm"]
BOX_COLUMNS = ["study_id", "x_min", "y_min", "x_max", "y_max"]

MANIFEST_NAME = "manifest.csv"
ANNOTATIONS_NAME = "annotations.csv"
CORPUS_PATH = Path("corpus") / "reports.txt"

_SYMPTOMS = {
    Label.NORMAL: ["chest pain", "preoperative evaluation", "routine screening", "fall", "palpitations"],
    Label.CHF: ["shortness of breath", "lower extremity edema", "orthopnea", "dyspnea on exertion", "weight gain"],
    Label.PNEUMONIA: ["fever", "productive cough", "cough and fever", "leukocytosis", "chills"],
}
_CONCERNS = ["acute process", "pneumonia", "effusion", "interval change"]

_FINDINGS = {
    Label.NORMAL: [
        "The lungs are clear.",
        "Heart size is normal.",
        "Cardiomediastinal silhouette is unremarkable.",
    ],
    Label.CHF: [
        "Cardiomegaly with pulmonary vascular congestion.",
        "Interstitial edema is present.",
        "Enlarged cardiac silhouette.",
    ],
    Label.PNEUMONIA: [
        "Focal consolidation in the lower lobe.",
        "Patchy airspace opacity concerning for infiltrate.",
        "Right basilar consolidation.",
    ],
}
_IMPRESSIONS = {
    Label.NORMAL: ["No acute cardiopulmonary process.", "Normal chest radiograph."],
    Label.CHF: ["Findings consistent with congestive heart failure.", "Mild pulmonary edema."],
    Label.PNEUMONIA: ["Findings concerning for pneumonia.", "Lobar pneumonia."],
}
_DISTRACTORS = [
    "No pneumothorax.",
    "Osseous structures are intact.",
    "Comparison to _____.",
    "Degenerative changes of the spine.",
    "Lines and tubes are unchanged.",
    "Dr. _____ was notified at _____.",
]


class GenerationConfig(BaseModel):
    """Size, class balance and signal strengths of a synthetic dataset."""

    n_studies: int = Field(default_factory=lambda: settings.n_studies, ge=1)
    image_size: int = Field(default_factory=lambda: settings.image_size, ge=8)
    class_priors: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    temporal_frames: int = Field(default_factory=lambda: settings.temporal_frames, ge=1)
    annotation_fraction: float = Field(default_factory=lambda: settings.annotation_fraction, ge=0, le=1)
    missing_gaze_fraction: float = Field(default_factory=lambda: settings.missing_gaze_fraction, ge=0, le=1)
    corpus_size: int = Field(default_factory=lambda: settings.corpus_size, ge=0)
    signal_dropout: float = Field(default=0.05, ge=0, le=1)
    keyword_rate: float = Field(default=0.95, ge=0, le=1)
    indication_signal: float = Field(default=0.5, ge=0, le=1)
    sigma: Optional[float] = Field(default=None, gt=0)
    max_studies_per_patient: int = Field(default=3, ge=1)

    @field_validator("class_priors")
    @classmethod
    def check_priors(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(p < 0 for p in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"class priors must be non-negative and sum to 1, got {v}")
        return v

    @property
    def gaze_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.image_size / 16.0


class DatasetManifest(BaseModel):
    """Where a generated dataset landed."""

    root: Path
    manifest: Path
    annotations: Path
    corpus: Path
    n_studies: int
    n_missing_gaze: int


class SyntheticStudy(BaseModel):
    """A generated study plus whether its gaze files are withheld on disk."""

    record: StudyRecord
    gaze_missing: bool = False


# Image synthesis


def _grid(size: int) -> Tuple[np.ndarray, np.ndarray]:
    centres = (np.arange(size) + 0.5) / size
    return np.meshgrid(centres, centres, indexing="xy")


def _ellipse(xx: np.ndarray, yy: np.ndarray, cx: float, cy: float, rx: float, ry: float) -> np.ndarray:
    """Soft-edged ellipse mask in [0, 1]."""
    d = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2
    return expit((1.0 - d) * 8.0)


def _chest_image(
    rng: np.random.Generator, size: int, label: Label, show_signal: bool
) -> Tuple[np.ndarray, Tuple[float, float, float]]:
    """Render an image and return it with the signature region ``(cx, cy, radius)``."""
    xx, yy = _grid(size)
    image = 150.0 + 25.0 * np.exp(-((xx - 0.5) ** 2) / 0.2 - ((yy - 0.55) ** 2) / 0.3)
    for cx in (0.32, 0.68):
        image -= 75.0 * _ellipse(xx, yy, cx, 0.47, 0.14, 0.27)
    image += 30.0 * np.exp(-((xx - 0.5) ** 2) / 0.002)  # spine
    image += 35.0 * _ellipse(xx, yy, 0.53, 0.64, 0.10, 0.09)  # normal heart

    region = (0.5, 0.5, 0.25)
    if label is Label.CHF:
        region = (0.52, 0.63, 0.2)
        if show_signal:
            image += 55.0 * _ellipse(xx, yy, 0.52, 0.63, 0.21, 0.15)
    elif label is Label.PNEUMONIA:
        cx = float(rng.choice([0.3, 0.7])) + rng.uniform(-0.05, 0.05)
        cy = rng.uniform(0.35, 0.62)
        radius = rng.uniform(0.09, 0.13)
        region = (cx, cy, radius)
        if show_signal:
            texture = 0.55 + 0.45 * rng.random((size, size))
            image += 70.0 * _ellipse(xx, yy, cx, cy, radius, radius) * texture

    image += rng.normal(0.0, 12.0, size=(size, size))
    return np.clip(np.rint(image), 0, 255).astype(np.uint8), region


def _box_for(region: Tuple[float, float, float], size: int) -> BoundingBox:
    cx, cy, radius = region
    x_min = int(np.clip(np.floor((cx - radius) * size), 0, size - 1))
    y_min = int(np.clip(np.floor((cy - radius) * size), 0, size - 1))
    x_max = int(np.clip(np.ceil((cx + radius) * size), x_min + 1, size))
    y_max = int(np.clip(np.ceil((cy + radius) * size), y_min + 1, size))
    return BoundingBox(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max)


def _fixations(
    rng: np.random.Generator, label: Label, region: Tuple[float, float, float]
) -> List[FixationEvent]:
    """Fixations cluster on the signature region; Normal studies scan both lungs."""
    events: List[FixationEvent] = []
    t = 0.0
    cx, cy, radius = region
    for _ in range(int(rng.integers(10, 21))):
        if label is Label.NORMAL or rng.random() > 0.75:
            x = float(rng.choice([0.32, 0.68])) + rng.normal(0.0, 0.08)
            y = 0.47 + rng.normal(0.0, 0.14)
        else:
            x = cx + rng.normal(0.0, radius * 0.5)
            y = cy + rng.normal(0.0, radius * 0.5)
        duration = float(rng.integers(100, 600))
        events.append(
            FixationEvent(
                t_start=t,
                duration=duration,
                x=round(float(np.clip(x, 0.0, 1.0)), 4),
                y=round(float(np.clip(y, 0.0, 1.0)), 4),
            )
        )
        t += duration + float(rng.integers(20, 120))
    return events


# Report synthesis


def _pick(rng: np.random.Generator, options: List[str]) -> str:
    return options[int(rng.integers(len(options)))]


def synthesize_report(rng: np.random.Generator, label: Label, config: GenerationConfig) -> Dict[str, str]:
    """Indication weakly tied to the label; findings and impression carry class keywords."""
    if rng.random() < config.indication_signal:
        symptom = _pick(rng, _SYMPTOMS[label])
    else:
        symptom = _pick(rng, [s for pool in _SYMPTOMS.values() for s in pool])
    sex = "man" if rng.random() < 0.5 else "woman"
    indication = f"_____-year-old {sex} with {symptom}. Evaluate for {_pick(rng, _CONCERNS)}."

    keyed = rng.random() < config.keyword_rate
    findings = [_pick(rng, _DISTRACTORS)]
    impression = []
    if keyed:
        findings.insert(int(rng.integers(2)), _pick(rng, _FINDINGS[label]))
        impression.append(_pick(rng, _IMPRESSIONS[label]))
    findings.append(_pick(rng, _DISTRACTORS))
    impression.append(_pick(rng, _DISTRACTORS))
    return {
        "indication": indication,
        "findings": " ".join(findings),
        "impression": " ".join(impression),
    }


def format_report(report: Dict[str, str]) -> str:
    return "".join(f"{section.upper()}: {report[section]}\n" for section in ("indication", "findings", "impression"))


def synthesize_corpus(config: GenerationConfig, seed: int) -> List[str]:
    """Embedding-training reports drawn from a stream disjoint from the study set."""
    rng = np.random.default_rng(derive_seed(seed, "corpus"))
    labels = rng.choice(3, size=config.corpus_size, p=list(config.class_priors)) + 1
    lines = []
    for code in labels:
        report = synthesize_report(rng, Label(int(code)), config)
        lines.append(" ".join(report[s] for s in ("indication", "findings", "impression")))
    return lines


def synthesize_studies(config: GenerationConfig, seed: int) -> List[SyntheticStudy]:
    """All studies of a dataset, fully determined by ``(config, seed)``."""
    rng = np.random.default_rng(derive_seed(seed, "dataset"))
    size = config.image_size
    labels = rng.choice(3, size=config.n_studies, p=list(config.class_priors)) + 1

    studies: List[SyntheticStudy] = []
    patient = 0
    remaining = 0
    for index, code in enumerate(labels):
        if remaining == 0:
            patient += 1
            remaining = int(rng.integers(1, config.max_studies_per_patient + 1))
        remaining -= 1

        label = Label(int(code))
        show_signal = label is not Label.NORMAL and rng.random() >= config.signal_dropout
        image, region = _chest_image(rng, size, label, show_signal)
        fixations = _fixations(rng, label, region)
        temporal = temporal_heatmaps(fixations, size, size, config.gaze_sigma, config.temporal_frames)
        boxes = []
        if label is Label.PNEUMONIA and rng.random() < config.annotation_fraction:
            boxes.append(_box_for(region, size))
        record = StudyRecord(
            study_id=f"S{index + 1:06d}",
            patient_id=f"P{patient:05d}",
            label=label,
            image=image,
            report=synthesize_report(rng, label, config),
            fixations=fixations,
            temporal=temporal,
            static=amalgamate_heatmaps(temporal),
            boxes=boxes,
        )
        studies.append(SyntheticStudy(record=record, gaze_missing=rng.random() < config.missing_gaze_fraction))
    return studies


# Writers


def write_fixations(path: Path, fixations: List[FixationEvent]) -> None:
    frame = pd.DataFrame(
        {
            "t_start_ms": [f.t_start for f in fixations],
            "duration_ms": [f.duration for f in fixations],
            "x_norm": [f.x for f in fixations],
            "y_norm": [f.y for f in fixations],
        },
        columns=FIXATION_COLUMNS,
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def _write_study(root: Path, study: SyntheticStudy) -> Dict[str, object]:
    record = study.record
    rel = Path("studies") / record.study_id
    (root / rel / "temporal").mkdir(parents=True, exist_ok=True)

    write_pgm(root / rel / "image.pgm", record.image)
    (root / rel / "report.txt").write_text(format_report(record.report), encoding="utf-8")
    if not study.gaze_missing:
        write_fixations(root / rel / "fixations.csv", record.fixations)
        for t, frame in enumerate(record.temporal):
            write_pgm(root / rel / "temporal" / f"frame_{t:03d}.pgm", frame.values)
        write_pgm(root / rel / "static.pgm", record.static.values)

    return {
        "study_id": record.study_id,
        "patient_id": record.patient_id,
        "label": int(record.label),
        "image": (rel / "image.pgm").as_posix(),
        "report": (rel / "report.txt").as_posix(),
        "fixations": (rel / "fixations.csv").as_posix(),
        "temporal_dir": (rel / "temporal").as_posix(),
        "static_heatmap": (rel / "static.pgm").as_posix(),
    }


def generate_synthetic_dataset(
    config: GenerationConfig, seed: int, out_dir: Path
) -> DatasetManifest:
    """Write studies, manifest, annotations and the embedding corpus under ``out_dir``."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    studies = synthesize_studies(config, seed)
    rows = [_write_study(root, study) for study in studies]
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(
        root / MANIFEST_NAME, index=False, lineterminator="\n"
    )

    boxes = [
        {"study_id": s.record.study_id, **box.model_dump()}
        for s in studies
        for box in s.record.boxes
    ]
    pd.DataFrame(boxes, columns=BOX_COLUMNS).to_csv(
        root / ANNOTATIONS_NAME, index=False, lineterminator="\n"
    )

    corpus_path = root / CORPUS_PATH
    corpus_path.parent.mkdir(parents=True, exist_ok=True)
    corpus_path.write_text("".join(f"{line}\n" for line in synthesize_corpus(config, seed)), encoding="utf-8")

    (root / "generation.json").write_text(
        json.dumps({"seed": seed, **config.model_dump()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    n_missing = sum(s.gaze_missing for s in studies)
    logger.info("dataset_generated", root=str(root), studies=len(studies), missing_gaze=n_missing)
    return DatasetManifest(
        root=root,
        manifest=root / MANIFEST_NAME,
        annotations=root / ANNOTATIONS_NAME,
        corpus=corpus_path,
        n_studies=len(studies),
        n_missing_gaze=n_missing,
    )
