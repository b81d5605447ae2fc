"""Principal-component projection of embedding vectors and its scatter plot."""

from pathlib import Path
from typing import Sequence, Union

import numpy as np

from gazemodal.core.models import Label
from gazemodal.errors import ArgumentError, DimensionError
from gazemodal.utils.plotting import plt, save_svg

_CLASS_COLOURS = {Label.NORMAL: "tab:green", Label.CHF: "tab:blue", Label.PNEUMONIA: "tab:red"}


def principal_axes(vectors: np.ndarray, k: int) -> np.ndarray:
    """Top-``k`` covariance eigenvectors as columns, largest eigenvalue first.

    Each column is signed so its largest-magnitude entry is positive.
    """
    centered = vectors - vectors.mean(axis=0)
    covariance = centered.T @ centered / (len(vectors) - 1)
    _, eigenvectors = np.linalg.eigh(covariance)
    axes = eigenvectors[:, ::-1][:, :k].copy()
    for j in range(k):
        pivot = int(np.argmax(np.abs(axes[:, j])))
        if axes[pivot, j] < 0:
            axes[:, j] = -axes[:, j]
    return axes


def pca_project(vectors: Sequence[Sequence[float]], k: int = 2) -> np.ndarray:
    """Project centred ``vectors`` onto their top-``k`` principal axes; returns ``[n, k]``."""
    data = np.asarray(vectors, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError(f"expected a list of vectors, got shape {data.shape}")
    if data.shape[0] < 2:
        raise ArgumentError(f"PCA needs at least 2 vectors, got {data.shape[0]}")
    if not 1 <= k <= data.shape[1]:
        raise ArgumentError(f"k must lie in [1, {data.shape[1]}], got {k}")
    return (data - data.mean(axis=0)) @ principal_axes(data, k)


def plot_projection(
    points: np.ndarray,
    labels: Sequence[Label],
    path: Union[str, Path],
    title: str = "",
) -> Path:
    """Class-coloured scatter of 2D projections, legend keyed 1/2/3."""
    points = np.asarray(points)
    if len(points) != len(labels):
        raise DimensionError(f"{len(points)} points but {len(labels)} labels", axis=0)
    fig, ax = plt.subplots(figsize=(5, 5))
    codes = np.array([int(label) for label in labels])
    for label, colour in _CLASS_COLOURS.items():
        mask = codes == int(label)
        ax.scatter(points[mask, 0], points[mask, 1], s=8, c=colour, label=str(int(label)))
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    if title:
        ax.set_title(title)
    ax.legend(title="class")
    return save_svg(fig, path)
