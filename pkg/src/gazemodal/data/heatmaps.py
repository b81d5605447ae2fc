"""Gaze heatmap rendering, amalgamation and resampling."""

from typing import List, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from gazemodal.core.models import FixationEvent, Heatmap
from gazemodal.errors import ArgumentError, DimensionError, EmptyInputError


def fixation_field(
    fixations: Sequence[FixationEvent], width: int, height: int, sigma: float
) -> np.ndarray:
    """Unscaled gaze field: one Gaussian of mass ``duration`` per fixation.

    Pixel ``(i, j)`` samples the field at its centre ``(j + 0.5, i + 0.5)``.
    """
    if sigma <= 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    norm = 1.0 / (2.0 * np.pi * sigma * sigma)
    field = np.zeros((height, width))
    for fixation in fixations:
        gx = np.exp(-((xs - fixation.x * width) ** 2) / (2.0 * sigma * sigma))
        gy = np.exp(-((ys - fixation.y * height) ** 2) / (2.0 * sigma * sigma))
        field += fixation.duration * norm * np.outer(gy, gx)
    return field


def rescale_to_255(field: np.ndarray) -> np.ndarray:
    """Linear rescale so the maximum maps to 255, rounded; an all-zero field stays zero."""
    peak = float(field.max()) if field.size else 0.0
    if peak <= 0.0:
        return np.zeros(field.shape, dtype=np.uint8)
    return np.rint(np.clip(field, 0.0, None) / peak * 255.0).astype(np.uint8)


def render_fixation_heatmap(
    fixations: Sequence[FixationEvent], width: int, height: int, sigma: float
) -> Heatmap:
    return Heatmap(values=rescale_to_255(fixation_field(fixations, width, height, sigma)))


def amalgamate_heatmaps(temporal: Sequence[Heatmap]) -> Heatmap:
    """Pixelwise sum of the temporal frames, rescaled to [0, 255]."""
    if not temporal:
        raise EmptyInputError("amalgamate_heatmaps needs at least one frame")
    shape = temporal[0].values.shape
    total = np.zeros(shape, dtype=np.int64)
    for index, frame in enumerate(temporal):
        if frame.values.shape != shape:
            raise DimensionError(f"frame {index} has shape {frame.values.shape}, expected {shape}", axis=index)
        total += frame.values
    return Heatmap(values=rescale_to_255(total.astype(np.float64)))


def temporal_heatmaps(
    fixations: Sequence[FixationEvent], width: int, height: int, sigma: float, frames: int = 8
) -> List[Heatmap]:
    """Bin the fixation log uniformly in time and render one frame per bin."""
    if frames < 1:
        raise ArgumentError(f"frames must be >= 1, got {frames}")
    bins: List[List[FixationEvent]] = [[] for _ in range(frames)]
    if fixations:
        horizon = max(f.t_start + f.duration for f in fixations)
        for fixation in fixations:
            bins[min(int(fixation.t_start / horizon * frames), frames - 1)].append(fixation)
    return [render_fixation_heatmap(group, width, height, sigma) for group in bins]


def resize_grid(grid: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling; integer grids come back rounded."""
    if new_w < 1 or new_h < 1:
        raise ArgumentError(f"target size must be >= 1, got {new_w}x{new_h}")
    grid = np.asarray(grid)
    height, width = grid.shape

    def axis(old: int, new: int) -> np.ndarray:
        if new == 1:
            return np.array([(old - 1) / 2.0])
        return np.linspace(0.0, old - 1, new)

    yy, xx = np.meshgrid(axis(height, new_h), axis(width, new_w), indexing="ij")
    out = map_coordinates(grid.astype(np.float64), [yy, xx], order=1, mode="nearest")
    out = np.clip(out, grid.min(), grid.max())
    if np.issubdtype(grid.dtype, np.integer):
        return np.rint(out).astype(grid.dtype)
    return out
