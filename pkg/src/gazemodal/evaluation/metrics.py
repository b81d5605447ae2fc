"""One-vs-rest AUC and the attention-overlap score."""

from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from gazemodal.core.models import BoundingBox, FoldAuc, Label
from gazemodal.errors import ArgumentError, DimensionError, UndefinedMetricError

ATTENTION_CUTOFF = 100


def binary_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly, ties worth 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DimensionError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors", axis=0)
    if not np.all(np.isin(labels, (0, 1))):
        raise ArgumentError("binary labels must be 0 or 1")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative example")

    ranks = rankdata(scores)
    wins = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(wins / (n_pos * n_neg))


def ovr_auc_report(probabilities: np.ndarray, labels: Sequence[int]) -> FoldAuc:
    """Per-class one-vs-rest AUC for labels coded 1/2/3 plus their mean."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if probabilities.ndim != 2 or probabilities.shape[1] != len(Label):
        raise DimensionError(f"probabilities must be [n, {len(Label)}], got {probabilities.shape}", axis=1)
    if probabilities.shape[0] != labels.size:
        raise DimensionError(f"{probabilities.shape[0]} rows for {labels.size} labels", axis=0)
    missing = [label.display for label in Label if not np.any(labels == int(label))]
    if missing:
        raise UndefinedMetricError(f"classes absent from labels: {missing}")

    per_class = [binary_auc(probabilities[:, label.index], labels == int(label)) for label in Label]
    return FoldAuc(
        auc_normal=per_class[0],
        auc_chf=per_class[1],
        auc_pneumonia=per_class[2],
        macro_avg=float(np.mean(per_class)),
    )


def box_mask(boxes: Sequence[BoundingBox], width: int, height: int) -> np.ndarray:
    """Union of half-open box interiors as a boolean ``[height, width]`` mask."""
    mask = np.zeros((height, width), dtype=bool)
    for box in boxes:
        if not box.fits(width, height):
            raise ArgumentError(f"box {box} lies outside a {width}x{height} map")
        mask[box.y_min : box.y_max, box.x_min : box.x_max] = True
    return mask


def attention_overlap(attention_map: np.ndarray, boxes: Sequence[BoundingBox]) -> float:
    """Attention mass above the cutoff inside the boxes over the mass above it everywhere.

    Pixels at or below 100 count as zero; each pixel counts once however many
    boxes cover it. A map with nothing above the cutoff scores 0.
    """
    grid = np.asarray(attention_map, dtype=np.float64)
    if grid.ndim != 2:
        raise DimensionError(f"attention map must be 2D, got shape {grid.shape}", axis=0)
    height, width = grid.shape
    mask = box_mask(boxes, width, height)
    kept = np.where(grid > ATTENTION_CUTOFF, grid, 0.0)
    denominator = kept.sum()
    if denominator == 0:
        return 0.0
    return float(kept[mask].sum() / denominator)
